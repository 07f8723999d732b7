"""Exception and warning types shared across the package."""


class QuadscatError(Exception):
    """Base class for all package errors."""


class PoleError(QuadscatError):
    """Evaluation point coincides with a pole of a resolvent-type function."""


class KindError(QuadscatError):
    """Operation not defined for this quadric kind."""


class IsotropicError(QuadscatError):
    """Joachimsthal integral vanishes; the reparametrization is undefined."""


class StepFailure(QuadscatError):
    """Adaptive step size underflowed before reaching the requested time."""


class ConstraintLost(QuadscatError):
    """Post-step projection onto the constraint manifold diverged."""


class NotEscaped(QuadscatError):
    """Trajectory end lies inside the escape radius."""


class DimensionError(QuadscatError):
    """Operation requires a specific surface dimension."""


class CollisionError(QuadscatError):
    """Two separation coordinates collided; denominator below tolerance."""


class IntervalError(QuadscatError):
    """Integration interval leaves the oval it was assigned to."""


class DivisorShapeError(QuadscatError):
    """Divisor does not carry one point per required oval."""


class DegenerateCurveError(QuadscatError):
    """Spectral curve has (nearly) coinciding branch points; periods diverge."""


class CaseError(QuadscatError):
    """Curve topology does not match the requested scattering case."""


class CriticalDivergence(QuadscatError):
    """Requested quantity diverges at the critical parameter value."""


class SingularPoint(QuadscatError):
    """Point lies on a singular locus of the metric."""


class AsymptoticConeError(QuadscatError):
    """The inversion is undefined on the asymptotic cone."""


class ChartError(QuadscatError):
    """Coordinates violate the chart equation."""


class DomainTooSmall(QuadscatError):
    """Potential is not negligible at the matching boundary."""


class ConfigError(QuadscatError):
    """Run configuration failed validation."""


class DegenerateCoordinateWarning(UserWarning):
    """A separation coordinate collided with a pole (point on a symmetry plane)."""


class DoubleRootWarning(UserWarning):
    """Two branch points of the spectral curve (nearly) coincide."""
