"""Real hyperelliptic spectral curve, oval periods, the partial Abel map and
the closed-form scattering results: rotation numbers, the Abel shift, cone
unfolding and the rotationally symmetric reductions.

The curve is w^2 = R(u) = -4 u prod_i (u - d_i) prod_k (u - b_k) with
b_k = eps / a_k and d_i = eps / c_i built from the conserved quantities of a
geodesic.  Bounded components (ovals) of the real curve carry the divisor
dynamics; all integrals over them are computed with the endpoint square-root
singularities removed by a sine substitution and Gauss-Legendre quadrature.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CaseError,
    CriticalDivergence,
    DegenerateCurveError,
    DivisorShapeError,
    DoubleRootWarning,
    IntervalError,
    KindError,
)
from .neumann import Divisor
from .quadric import CaseLabel, IntegralSet, Kind, QuadricSpec

_DEGENERATE_GAP = 1e-8


@dataclass(frozen=True)
class SpectralCurve:
    """Branch data of w^2 = R(u) with its real ovals.

    roots: the 2n+1 branch points {0, d_i, b_k}, ascending.
    ovals: closed intervals [lo, hi] with R >= 0, ascending by position.
    dist_index: index into ovals of the distinguished oval touching u = 0.
    """

    roots: np.ndarray
    ovals: tuple
    dist_index: int
    b: np.ndarray
    d: np.ndarray
    eps: int

    @property
    def n(self) -> int:
        return len(self.ovals)

    @property
    def min_gap(self) -> float:
        return float(np.min(np.diff(self.roots)))

    def R(self, u: float) -> float:
        return float(-4.0 * np.prod(u - self.roots))

    def oval_of(self, u: float, tol: float = 1e-9) -> int:
        for i, (lo, hi) in enumerate(self.ovals):
            if lo - tol <= u <= hi + tol:
                return i
        return -1

    def require_nondegenerate(self):
        if self.min_gap < _DEGENERATE_GAP:
            raise DegenerateCurveError(
                f"branch points within {self.min_gap:g}: periods diverge"
            )


def build_spectral_curve(spec: QuadricSpec, iset: IntegralSet) -> SpectralCurve:
    """Curve of the geodesic with the given integrals (J must be nonzero).

    Emits DoubleRootWarning when two branch points nearly coincide (critical
    or otherwise singular orbit); the curve is still returned so callers can
    inspect it, but period operations will refuse it.
    """
    if iset.isotropic or iset.eps == 0:
        raise ValueError("isotropic state has no spectral curve")
    eps = iset.eps
    b = np.sort(eps / spec.axes)
    if np.any(iset.c == 0):
        raise ValueError("vanishing confocal parameter")
    d = np.sort(eps / iset.c) if iset.c.size else np.array([])
    roots = np.sort(np.concatenate([[0.0], d, b]))
    scale = max(roots[-1] - roots[0], 1.0)
    if np.min(np.diff(roots)) < _DEGENERATE_GAP * scale:
        warnings.warn(
            "nearly coinciding branch points: singular (critical) curve",
            DoubleRootWarning,
            stacklevel=2,
        )
    ovals = []
    for lo, hi in zip(roots[:-1], roots[1:]):
        mid = 0.5 * (lo + hi)
        if -4.0 * np.prod(mid - roots) > 0:
            ovals.append((float(lo), float(hi)))
    dist = [i for i, (lo, hi) in enumerate(ovals) if lo == 0.0 or hi == 0.0]
    if len(dist) != 1:
        raise ValueError("expected exactly one oval touching u = 0")
    return SpectralCurve(
        roots=roots, ovals=tuple(ovals), dist_index=dist[0],
        b=b, d=d, eps=eps,
    )


def _gauss_nodes(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def abelian_integral(curve: SpectralCurve, j: int, frm: float, to: float,
                     sheet: int = 1, nodes: int = 128) -> float:
    """int_frm^to u^{j-1} du / sqrt(R(u)) on one sheet of one oval.

    [frm, to] must lie inside the closure of a single oval; the substitution
    u = m + r sin(theta) with (m, r) the oval midpoint and half-width removes
    the inverse-square-root endpoint singularities, leaving a smooth
    integrand for Gauss-Legendre quadrature.
    """
    iv = curve.oval_of(frm)
    if iv < 0 or iv != curve.oval_of(to):
        raise IntervalError("integration interval leaves the oval")
    lo, hi = curve.ovals[iv]
    if frm == to:
        return 0.0
    m = 0.5 * (lo + hi)
    r = 0.5 * (hi - lo)
    if r == 0.0:
        raise DegenerateCurveError("collapsed oval")
    # R with the factors (u - lo)(u - hi) divided out; positive on the oval
    rest = curve.roots[(curve.roots != lo) & (curve.roots != hi)]

    ta = np.arcsin(np.clip((frm - m) / r, -1.0, 1.0))
    tb = np.arcsin(np.clip((to - m) / r, -1.0, 1.0))
    xg, wg = _gauss_nodes(nodes)
    theta = 0.5 * (tb - ta) * xg + 0.5 * (ta + tb)
    u = m + r * np.sin(theta)
    rtilde = 4.0 * np.prod(u[:, None] - rest[None, :], axis=1)
    vals = u ** (j - 1) / np.sqrt(rtilde)
    return float(sheet * 0.5 * (tb - ta) * np.dot(wg, vals))


def oval_loop(curve: SpectralCurve, oval_index: int, j: int,
              nodes: int = 128) -> float:
    """Loop integral of u^{j-1} du / sqrt(R) around a full oval (both sheets)."""
    lo, hi = curve.ovals[oval_index]
    return 2.0 * abelian_integral(curve, j, lo, hi, sheet=1, nodes=nodes)


@dataclass(frozen=True)
class AbelPoint:
    """Partial Abel coordinates with the period lattice attached."""

    coords: np.ndarray
    lattice: np.ndarray  # rows are lattice generator vectors

    def reduce(self, v=None) -> np.ndarray:
        """Representative of (v or coords) modulo the lattice nearest zero."""
        v = np.asarray(self.coords if v is None else v, dtype=float)
        L = self.lattice.T  # columns are generators
        m = np.rint(np.linalg.solve(L, v) if L.shape[0] == L.shape[1]
                    else np.linalg.lstsq(L, v, rcond=None)[0])
        return v - L @ m


def _scattering_ovals(curve: SpectralCurve):
    return [i for i in range(curve.n) if i != curve.dist_index]


def period_lattice(curve: SpectralCurve, nodes: int = 128) -> np.ndarray:
    """Lattice generators: one vector per non-distinguished oval.

    Row i holds the loop integrals of the n-1 differentials around oval
    alpha_i, i.e. the change of the Abel coordinates when the divisor point
    on that oval makes one full circuit.
    """
    curve.require_nondegenerate()
    genus_ovals = _scattering_ovals(curve)
    m = len(genus_ovals)
    out = np.empty((m, m))
    for row, i in enumerate(genus_ovals):
        for j in range(1, m + 1):
            out[row, j - 1] = oval_loop(curve, i, j, nodes=nodes)
    return out


def abel_map(curve: SpectralCurve, D: Divisor, nodes: int = 128) -> AbelPoint:
    """Partial Abel map of a divisor with one point per non-distinguished oval.

    Base points are the left branch points of each oval; a point on the lower
    sheet (w < 0) is reached by continuing through the right branch point, so
    the map is continuous around the whole oval.  Divisor points on the
    distinguished oval are ignored; any other mismatch raises
    DivisorShapeError.
    """
    curve.require_nondegenerate()
    genus_ovals = _scattering_ovals(curve)
    per_oval = {i: [] for i in genus_ovals}
    for u, w in zip(D.u, D.w):
        i = curve.oval_of(u)
        if i < 0:
            raise DivisorShapeError(f"divisor point u={u:g} lies on no oval")
        if i == curve.dist_index:
            continue
        per_oval[i].append((u, w))
    for i, pts in per_oval.items():
        if len(pts) != 1:
            raise DivisorShapeError(
                f"oval {i} carries {len(pts)} divisor points, expected 1"
            )
    m = len(genus_ovals)
    coords = np.zeros(m)
    for i in genus_ovals:
        (u, w) = per_oval[i][0]
        lo, hi = curve.ovals[i]
        u = min(max(u, lo), hi)
        for j in range(1, m + 1):
            upper = abelian_integral(curve, j, lo, u, sheet=1, nodes=nodes)
            if w >= 0:
                val = upper
            else:
                val = oval_loop(curve, i, j, nodes=nodes) - upper
            coords[j - 1] += val
    return AbelPoint(coords=coords, lattice=period_lattice(curve, nodes=nodes))


def scattering_shift(curve: SpectralCurve, nodes: int = 128) -> np.ndarray:
    """Shift vector: loop integrals of the n-1 differentials around the
    distinguished oval (the one touching u = 0).

    Diverges logarithmically as the curve degenerates to a double root;
    that case raises CriticalDivergence.
    """
    try:
        curve.require_nondegenerate()
    except DegenerateCurveError as e:
        raise CriticalDivergence(str(e)) from e
    m = curve.n - 1
    return np.array(
        [oval_loop(curve, curve.dist_index, j, nodes=nodes) for j in range(1, m + 1)]
    )


def rotation_number(curve: SpectralCurve, kind: Kind, nodes: int = 128):
    """Number of full rotations about the symmetry axis of a reflected
    geodesic, from the two basic periods of the curve (n = 2 only).

    I1 is the loop of du/sqrt(R) around the distinguished oval (the total
    Abel-coordinate advance imparted over the whole scattering process), I2
    the loop around the rotational oval (one circuit of which flips the signs
    of both transverse coordinates, i.e. half a rotation).  Hence
    N = floor(I1 / (2 I2)).
    """
    if curve.n != 2:
        raise CaseError("rotation number defined for n = 2 curves")
    lo_d, hi_d = curve.ovals[curve.dist_index]
    other = _scattering_ovals(curve)[0]
    lo_o, _ = curve.ovals[other]
    if kind is Kind.ONE_SHEETED:
        # reflection curve: distinguished oval [d, 0] left of the positive oval
        if not (hi_d == 0.0 and lo_d < 0.0 and lo_o > 0.0):
            raise CaseError("curve is not a one-sheeted reflection curve")
    elif kind is Kind.TWO_SHEETED:
        if not (lo_d == 0.0 and lo_o > hi_d):
            raise CaseError("curve is not a two-sheeted reflection curve")
    else:
        raise KindError("rotation count applies to hyperboloids")
    I1 = oval_loop(curve, curve.dist_index, 1, nodes=nodes)
    I2 = oval_loop(curve, other, 1, nodes=nodes)
    N = int(np.floor(I1 / (2.0 * I2)))
    return N, I1, I2


# ---------------------------------------------------------------------------
# cone: flat metric, scattering is a rigid shift of the developed angle


def cone_angle(spec: QuadricSpec, nodes: int = 128) -> float:
    """Total developed angle of the cone: length of its unit-sphere section.

    alpha = (4/sqrt(k2)) int_0^1 sqrt((1 - k1 t^2)/((1 - t^2)(1 - (k1/k2) t^2))) dt
    with k1 = (a2 - a1)/a2 and k2 = (a2 - a0)/a2; the t = sin(theta)
    substitution removes the endpoint singularity.
    """
    if spec.kind is not Kind.CONE or spec.n != 2:
        raise KindError("cone angle defined for n = 2 cones")
    a0, a1, a2 = spec.axes
    k1 = (a2 - a1) / a2
    k2 = (a2 - a0) / a2
    xg, wg = _gauss_nodes(nodes)
    theta = 0.25 * np.pi * (xg + 1.0)
    st2 = np.sin(theta) ** 2
    integrand = np.sqrt((1.0 - k1 * st2) / (1.0 - (k1 / k2) * st2))
    val = 0.25 * np.pi * np.dot(wg, integrand)
    return float(4.0 / np.sqrt(k2) * val)


def cone_scatter(alpha: float, incoming_angle: float) -> float:
    """Scattering on the cone: shift the developed ray angle by pi mod alpha."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    return float((incoming_angle + np.pi) % alpha)


class ConeDevelopment:
    """Developing map of one nappe of a cone onto the flat plane.

    Supplies the intrinsic (arc-length) angle of rays from the vertex and the
    developed direction angle of tangent vectors, both continuous along a
    trajectory when the azimuth is unwrapped.
    """

    def __init__(self, spec: QuadricSpec, nappe: int = 1, n_grid: int = 4096):
        if spec.kind is not Kind.CONE or spec.n != 2:
            raise KindError("development defined for n = 2 cones")
        self.spec = spec
        self.nappe = 1 if nappe >= 0 else -1
        phi = np.linspace(0.0, 2.0 * np.pi, n_grid + 1)
        speed = np.array([np.linalg.norm(self._dcurve(f)) for f in phi])
        from scipy.interpolate import CubicSpline

        cs = CubicSpline(phi, speed, bc_type="periodic")
        anti = cs.antiderivative()
        self._psi_spline = anti
        self.alpha = float(anti(2.0 * np.pi))

    def _curve(self, phi: float) -> np.ndarray:
        a0, a1, a2 = self.spec.axes
        g = np.cos(phi) ** 2 / a1 + np.sin(phi) ** 2 / a2
        rho = 1.0 / np.sqrt(1.0 - a0 * g)
        x0 = self.nappe * np.sqrt(max(1.0 - rho * rho, 0.0))
        return np.array([x0, rho * np.cos(phi), rho * np.sin(phi)])

    def _dcurve(self, phi: float, h: float = 1e-6) -> np.ndarray:
        return (self._curve(phi + h) - self._curve(phi - h)) / (2.0 * h)

    def psi(self, phi_unwrapped: float) -> float:
        """Intrinsic angle of the ray with (unwrapped) azimuth phi."""
        k, rem = divmod(phi_unwrapped, 2.0 * np.pi)
        return float(k * self.alpha + self._psi_spline(rem))

    def developed_direction(self, x, y, phi_unwrapped: float) -> float:
        """Angle of the developed velocity y at cone point x.

        Constant along a geodesic: the developed image is a straight line.
        """
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        r = np.linalg.norm(x)
        e_r = x / r
        dc = self._dcurve(np.mod(phi_unwrapped, 2.0 * np.pi))
        e_psi = dc / np.linalg.norm(dc)
        v_rad = np.dot(y, e_r)
        v_ang = np.dot(y, e_psi)
        return self.psi(phi_unwrapped) + np.arctan2(v_ang, v_rad)


# ---------------------------------------------------------------------------
# rotationally symmetric hyperboloid (a1 = a2): closed forms


def symmetric_classify(a: float, c: float, H: float, I: float,
                       tol: float = 1e-12):
    """Reflection/transmission verdict and closed-form invariants for the
    surface of revolution (x1^2 + x2^2)/a^2 - x0^2/c^2 = 1.

    C = I/sqrt(2H) is the Clairaut invariant; C^2 > a^2 reflects, C^2 < a^2
    transmits.  Returns (label, J, F0, C) where J and F0 are the general
    conserved quantities expressed through (H, I):
        J  = ((b^2/a^2) I^2 - 2 a^2 H) / (a^4 c^2),      b^2 = a^2 + c^2
        F0 = (2 c^2 H / (a^2 b^2)) (a^2 - C^2).
    """
    if a <= 0 or c <= 0 or H <= 0:
        raise ValueError("need a, c, H > 0")
    b2 = a * a + c * c
    C = I / np.sqrt(2.0 * H)
    J = (b2 / (a * a) * I * I - 2.0 * a * a * H) / (a**4 * c * c)
    F0 = (2.0 * c * c * H / (a * a * b2)) * (a * a - C * C)
    gap = C * C - a * a
    if abs(gap) <= tol * a * a:
        label = CaseLabel.CRITICAL
    elif gap > 0:
        label = CaseLabel.REFLECTION
    else:
        label = CaseLabel.TRANSMISSION
    return label, float(J), float(F0), float(C)


def symmetric_delta_phi(a: float, c: float, I: float, mode: str | None = None,
                        u_max: float = np.pi / 2, nodes: int = 256,
                        tol: float = 1e-9) -> float:
    """Total azimuth change of a unit-speed geodesic on the symmetric
    hyperboloid, by quadrature of the closed-form integrals.

    With rho = tan(u) the integrand becomes
        sqrt((c^2 cos^2 u + b^2 sin^2 u) / (a^2 - I^2 cos^2 u)),
    integrated over (-u_max, u_max) scaled by I/a in the transmission case
    (I^2 < a^2) and over (u_*, u_max), u_* = arccos(a/|I|), scaled by 2I/a in
    the reflection case.  u_max < pi/2 truncates at rho = tan(u_max) for
    comparison against finite-horizon integrations; the default is the full
    integral.  Raises CriticalDivergence at |I| = a where the integral blows
    up logarithmically.
    """
    b2 = a * a + c * c
    gap = I * I - a * a
    if abs(gap) < tol * a * a:
        raise CriticalDivergence("Clairaut value at the neck: integral diverges")
    inferred = "reflection" if gap > 0 else "transmission"
    if mode is not None and mode != inferred:
        raise ValueError(f"I = {I:g} implies {inferred}, not {mode}")
    xg, wg = _gauss_nodes(nodes)

    def integrand(u):
        cu2 = np.cos(u) ** 2
        su2 = np.sin(u) ** 2
        return np.sqrt((c * c * cu2 + b2 * su2) / (a * a - I * I * cu2))

    if inferred == "transmission":
        # smooth integrand on (-u_max, u_max)
        u = u_max * xg
        return float(I / a * u_max * np.dot(wg, integrand(u)))
    # reflection: inverse-sqrt singularity at the turning angle u_*; the
    # substitution u = m + r sin(theta) makes the integrand smooth in theta
    u_star = np.arccos(a / abs(I))
    if u_star >= u_max:
        raise ValueError("turning angle beyond the truncation angle")
    m = 0.5 * (u_star + u_max)
    r = 0.5 * (u_max - u_star)
    theta = 0.5 * np.pi * xg
    u = m + r * np.sin(theta)
    vals = integrand(u) * r * np.cos(theta)
    return float(2.0 * I / a * 0.5 * np.pi * np.dot(wg, vals))


def symmetric_phase_state(a: float, c: float, rho: float, phi: float,
                          I: float, H: float = 0.5, sign_rhodot: int = 1):
    """Ambient (x, y) of the symmetric-hyperboloid geodesic state with
    angular momentum I and energy H at position (rho, phi).

    Coordinate order: x_0 along the symmetry axis, so the embedding quadric
    has semi-axis parameters (-c^2, a^2, a^2).  Raises ValueError when
    (rho, I, H) is kinematically inaccessible.
    """
    b2 = a * a + c * c
    s = np.sqrt(1.0 + rho * rho)
    phidot = I / (a * a * s * s)
    rad2 = (2.0 * H - a * a * s * s * phidot**2) * s * s / (c * c + b2 * rho * rho)
    if rad2 < -1e-15:
        raise ValueError("state outside the accessible region")
    rhodot = sign_rhodot * np.sqrt(max(rad2, 0.0))
    x = np.array([c * rho, a * s * np.cos(phi), a * s * np.sin(phi)])
    ds = rho * rhodot / s
    y = np.array(
        [
            c * rhodot,
            a * (ds * np.cos(phi) - s * np.sin(phi) * phidot),
            a * (ds * np.sin(phi) + s * np.cos(phi) * phidot),
        ]
    )
    return x, y
