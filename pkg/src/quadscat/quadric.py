"""Quadric geometry: constraint algebra, conserved quantities, confocal
coordinates and trajectory classification.

A quadric is Q(x) = sum_k x_k^2 / a_k = rhs with diagonal A = diag(a_k),
B = A^{-1}.  Everything downstream (flows, the sphere system, the spectral
curve) consumes the quantities computed here.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P

from ._roots import interlaced_roots
from .errors import DegenerateCoordinateWarning, KindError, PoleError

#: default tolerances; every operation accepting them can be overridden per call
TOL_CONSTRAINT = 1e-9
TOL_CLASS = 1e-6
TOL_ISO = 1e-10
_POLE_TOL = 1e-9


class Kind(enum.Enum):
    ONE_SHEETED = "one-sheeted"
    TWO_SHEETED = "two-sheeted"
    ELLIPSOID = "ellipsoid"
    CONE = "cone"


_RHS = {
    Kind.ONE_SHEETED: 1.0,
    Kind.TWO_SHEETED: -1.0,
    Kind.ELLIPSOID: 1.0,
    Kind.CONE: 0.0,
}


class CaseLabel(enum.Enum):
    TRANSMISSION = "transmission"
    REFLECTION = "reflection"
    CRITICAL = "critical"
    ISOTROPIC = "isotropic"
    CASE_I = "I"
    CASE_II = "II"
    CASE_III = "III"
    CASE_IV = "IV"


@dataclass(frozen=True)
class QuadricSpec:
    """Diagonal quadric sum x_k^2/a_k = rhs(kind) in R^(n+1).

    axes must be strictly increasing with the sign pattern of the kind:
    a_0 < 0 < a_1 < ... < a_n for hyperboloids and cones, all positive for
    ellipsoids.
    """

    axes: np.ndarray
    kind: Kind = Kind.ONE_SHEETED

    def __post_init__(self):
        axes = np.atleast_1d(np.asarray(self.axes, dtype=float))
        object.__setattr__(self, "axes", axes)
        if axes.size < 2:
            raise ValueError("need at least two semi-axis parameters")
        if np.any(np.diff(axes) <= 0):
            raise ValueError("semi-axis parameters must be strictly increasing")
        if self.kind is Kind.ELLIPSOID:
            if axes[0] <= 0:
                raise ValueError("ellipsoid axes must all be positive")
        else:
            if not (axes[0] < 0 < axes[1]):
                raise ValueError("hyperboloid/cone requires a_0 < 0 < a_1")

    @property
    def n(self) -> int:
        """Dimension of the quadric surface."""
        return self.axes.size - 1

    @property
    def b(self) -> np.ndarray:
        """Diagonal of B = A^{-1}."""
        return 1.0 / self.axes

    @property
    def rhs(self) -> float:
        return _RHS[self.kind]


@dataclass(frozen=True)
class PhaseState:
    """Point x on the quadric and tangent velocity y."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float))

    def validate(self, spec: QuadricSpec, tol: float = TOL_CONSTRAINT,
                 unit_speed: bool = False):
        if abs(eval_constraint(spec, self.x)) > tol:
            raise ValueError("point not on the quadric")
        if abs(tangency_residual(spec, self.x, self.y)) > tol:
            raise ValueError("velocity not tangent to the quadric")
        if unit_speed and abs(np.dot(self.y, self.y) - 1.0) > tol:
            raise ValueError("velocity not unit length")
        return self


@dataclass(frozen=True)
class IntegralSet:
    """Conserved quantities of one geodesic: F_0..F_n, J, confocal parameters."""

    F: np.ndarray
    J: float
    c: np.ndarray
    eps: int  # sign of J; 0 flags an isotropic (generator line) state
    isotropic: bool = False


@dataclass(frozen=True)
class Classification:
    label: CaseLabel
    case: CaseLabel | None = None
    c_interval_ok: bool | None = None
    integrals: IntegralSet | None = None


def eval_constraint(spec: QuadricSpec, x) -> float:
    """Q(x) - rhs(kind); zero iff x lies on the quadric."""
    x = np.asarray(x, dtype=float)
    return float(np.sum(x * x / spec.axes) - spec.rhs)


def tangency_residual(spec: QuadricSpec, x, y) -> float:
    """(Bx, y); zero iff y is tangent at x."""
    return float(np.sum(np.asarray(x) * np.asarray(y) / spec.axes))


def phi_z(spec: QuadricSpec, x, y, z: float) -> float:
    """Tangency function of the confocal family evaluated at parameter z.

    Phi_z(x, y) = (1 + (R_z x, x)) (R_z y, y) - (R_z x, y)^2 with
    R_z = (zI - A)^{-1}; the two-sheeted kind uses ((R_z x, x) - 1) in the
    first factor.  Phi_z(x, y) = 0 means the line through x with direction y
    is tangent to the confocal quadric with parameter z.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    gaps = z - spec.axes
    if np.min(np.abs(gaps)) < _POLE_TOL:
        raise PoleError(f"z={z:g} too close to a semi-axis parameter")
    rz = 1.0 / gaps
    rxx = np.sum(rz * x * x)
    ryy = np.sum(rz * y * y)
    rxy = np.sum(rz * x * y)
    first = rxx - 1.0 if spec.kind is Kind.TWO_SHEETED else 1.0 + rxx
    return float(first * ryy - rxy * rxy)


def integral_fk(axes, k: int, x, y, two_sheeted: bool = False) -> float:
    """Single first integral F_k for raw semi-axis parameters.

    Tolerates repeated axes as long as index k does not collide with them
    (used by the symmetric-case closed forms where a_1 = a_2).
    """
    axes = np.asarray(axes, dtype=float)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    cross = x[k] * y - x * y[k]
    diffs = axes[k] - axes
    mask = np.arange(axes.size) != k
    fk = np.sum(cross[mask] ** 2 / diffs[mask])
    fk += -y[k] ** 2 if two_sheeted else y[k] ** 2
    return float(fk)


def joachimsthal(axes, x, y) -> float:
    """J = (Bx, Bx)(By, y), conserved along every geodesic."""
    b = 1.0 / np.asarray(axes, dtype=float)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    bx = b * x
    return float(np.dot(bx, bx) * np.sum(b * y * y))


def _confocal_parameters(spec: QuadricSpec, F: np.ndarray) -> np.ndarray:
    # numerator of sum F_k / (z - a_k) after clearing denominators; degree n,
    # known roots {0, c_1..c_{n-1}}, so deflate z and read off the rest
    n1 = spec.axes.size
    num = np.zeros(n1)
    for k in range(n1):
        others = np.delete(spec.axes, k)
        num = num + F[k] * P.polyfromroots(others)
    # constant term vanishes by sum a_k^{-1} F_k = 0; drop it to deflate z=0
    deflated = num[1:]
    if deflated.size <= 1:
        return np.array([])
    roots = np.sort(np.real(P.polyroots(deflated)))
    return roots


def integrals(spec: QuadricSpec, state: PhaseState,
              tol_iso: float = TOL_ISO) -> IntegralSet:
    """All conserved quantities of the geodesic through the given state.

    Returns the n+1 integrals F_k, the Joachimsthal value J, the confocal
    tangency parameters c_1..c_{n-1} (ascending) and the sign eps of J.
    |J| < tol_iso marks an isotropic generator-line state: eps is set to 0
    and the confocal parameters are still reported.
    """
    two = spec.kind is Kind.TWO_SHEETED
    F = np.array(
        [integral_fk(spec.axes, k, state.x, state.y, two) for k in range(spec.axes.size)]
    )
    J = joachimsthal(spec.axes, state.x, state.y)
    if spec.kind is Kind.CONE:
        # tangent lines of cone geodesics miss the base quadric, so z = 0 is
        # not a root of Phi and the deflation below does not apply
        c = np.array([])
    else:
        c = _confocal_parameters(spec, F)
    isotropic = abs(J) < tol_iso
    eps = 0 if isotropic else (1 if J > 0 else -1)
    return IntegralSet(F=F, J=J, c=c, eps=eps, isotropic=isotropic)


def jacobi_elliptic_coords(spec: QuadricSpec, x, zero_tol: float = 1e-6):
    """Elliptic coordinates z_1 <= ... <= z_n of a point on the quadric.

    They are the nonzero roots of sum x_i^2/(z - a_i) + s = 0 where s = 1 for
    Q(x) = 1 kinds and s = -1 for the two-sheeted kind.  Roots are found by
    bisection on the pole-bracketed intervals and returned ascending; a root
    colliding with a semi-axis parameter (vanishing coordinate x_i) triggers
    a DegenerateCoordinateWarning.
    """
    x = np.asarray(x, dtype=float)
    s = -1.0 if spec.kind is Kind.TWO_SHEETED else 1.0
    roots, degen = interlaced_roots(x * x, spec.axes, s)
    if degen.any():
        warnings.warn(
            "point lies on a symmetry plane; elliptic coordinate(s) collide "
            f"with semi-axis parameter(s) {spec.axes[np.isin(spec.axes, roots[degen])]}",
            DegenerateCoordinateWarning,
            stacklevel=2,
        )
    # Q(x) = rhs forces z = 0 to be a root; drop it
    i0 = int(np.argmin(np.abs(roots)))
    if abs(roots[i0]) > zero_tol:
        raise ValueError("no root near zero; is the point on the quadric?")
    return np.delete(roots, i0)


_CASE_TABLE = {
    # (sign F0, sign F1, sign J) -> case; n = 2 one-sheeted only
    (-1, -1, 1): CaseLabel.CASE_I,
    (1, -1, 1): CaseLabel.CASE_II,
    (1, -1, -1): CaseLabel.CASE_III,
    (1, 1, -1): CaseLabel.CASE_IV,
}


def _c_interval_ok(case: CaseLabel, c: float, axes, tol: float) -> bool:
    a0, a1, a2 = axes
    if case is CaseLabel.CASE_I:
        return c < a0 + tol
    if case is CaseLabel.CASE_II:
        return a0 - tol < c < tol
    if case is CaseLabel.CASE_III:
        return -tol < c < a1 + tol
    return a1 - tol < c < a2 + tol


def classify_state(spec: QuadricSpec, state: PhaseState,
                   tol_class: float = TOL_CLASS,
                   tol_iso: float = TOL_ISO) -> Classification:
    """Transmission / reflection / critical / isotropic verdict for a geodesic.

    Transmission (the geodesic crosses the neck x_0 = 0) iff F_0 > tol_class,
    reflection iff F_0 < -tol_class, critical in between, isotropic when the
    Joachimsthal integral vanishes.  For n = 2 the verdict is refined into the
    four sign cases of (F_0, F_1, J) and the confocal parameter is checked
    against the interval the case dictates.
    """
    if spec.kind is not Kind.ONE_SHEETED:
        raise KindError("classification applies to one-sheeted hyperboloids")
    iset = integrals(spec, state, tol_iso=tol_iso)
    if iset.isotropic:
        return Classification(CaseLabel.ISOTROPIC, integrals=iset)
    F0 = iset.F[0]
    if abs(F0) <= tol_class:
        label = CaseLabel.CRITICAL
    elif F0 > 0:
        label = CaseLabel.TRANSMISSION
    else:
        label = CaseLabel.REFLECTION
    case = None
    c_ok = None
    if spec.n == 2 and label is not CaseLabel.CRITICAL:
        key = (
            1 if F0 > 0 else -1,
            1 if iset.F[1] > tol_class else (-1 if iset.F[1] < -tol_class else 0),
            iset.eps,
        )
        case = _CASE_TABLE.get(key)
        if case is not None and iset.c.size == 1:
            c_ok = _c_interval_ok(case, float(iset.c[0]), spec.axes, tol_class)
    return Classification(label, case=case, c_interval_ok=c_ok, integrals=iset)


def random_state(spec: QuadricSpec, rng: np.random.Generator,
                 unit_speed: bool = True, max_norm: float = 10.0) -> PhaseState:
    """Sample a point on the quadric with a random tangent direction.

    Directions are Gaussian; the point is the ray intersection with the
    quadric, rejected while it falls outside max_norm (keeps test states at
    desk scale).  Not uniform in any canonical measure; adequate for
    randomized identity checks.
    """
    d = spec.axes.size
    if spec.kind is Kind.CONE:
        # scale is free on the cone: solve for x_0 given the transverse part
        while True:
            v = rng.standard_normal(d)
            v[0] = 0.0
            s2 = -spec.axes[0] * np.sum(v[1:] ** 2 / spec.axes[1:])
            x = v.copy()
            x[0] = np.sqrt(s2) * rng.choice([-1.0, 1.0])
            nx = np.linalg.norm(x)
            if 0.1 < nx <= max_norm:
                break
    else:
        while True:
            v = rng.standard_normal(d)
            qv = np.sum(v * v / spec.axes)
            if qv * spec.rhs <= 0 or abs(qv) < 1e-12:
                continue
            x = v * np.sqrt(spec.rhs / qv)
            if np.linalg.norm(x) <= max_norm:
                break
    bx = x / spec.axes
    while True:
        w = rng.standard_normal(d)
        y = w - np.dot(bx, w) / np.dot(bx, bx) * bx
        ny = np.linalg.norm(y)
        if ny > 1e-8:
            break
    if unit_speed:
        y = y / ny
    return PhaseState(x=x, y=y)
