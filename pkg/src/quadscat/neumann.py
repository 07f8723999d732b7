"""Motion on the unit sphere under a diagonal quadratic potential: integration,
first integrals, separation coordinates, divisor lifting and the identity
tying it to geodesics on quadrics through the Gauss map.

The convention throughout: the potential matrix is diag(b) with b strictly
increasing; when the system is built from a quadric the sign of the
Joachimsthal integral is folded into b (b_k = eps / a_k, coordinates permuted
to make b ascending) so there is a single code path for both signs.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import rk
from ._roots import interlaced_roots
from .errors import (
    CollisionError,
    DegenerateCoordinateWarning,
    IsotropicError,
    PoleError,
)
from .flow import gauss_map, time_rescale_rate
from .quadric import TOL_ISO, Kind, PhaseState, QuadricSpec, integrals, phi_z

_POLE_TOL = 1e-9


@dataclass(frozen=True)
class NeumannSpec:
    """Potential diagonal b (ascending) with the folded sign recorded.

    perm maps sphere coordinates back to the ambient quadric coordinates when
    the spec was produced by from_quadric: b[i] = eps / axes[perm[i]].
    """

    b: np.ndarray
    eps: int = 1
    perm: np.ndarray | None = None

    def __post_init__(self):
        b = np.asarray(self.b, dtype=float)
        object.__setattr__(self, "b", b)
        if np.any(np.diff(b) <= 0):
            raise ValueError("potential diagonal must be strictly increasing")
        if self.perm is not None:
            object.__setattr__(self, "perm", np.asarray(self.perm, dtype=int))

    @property
    def n(self) -> int:
        return self.b.size - 1

    @classmethod
    def from_quadric(cls, spec: QuadricSpec, eps: int) -> "NeumannSpec":
        if spec.kind is Kind.TWO_SHEETED and eps != 1:
            raise ValueError("two-sheeted geodesics always map with eps = +1")
        raw = eps / spec.axes
        perm = np.argsort(raw)
        return cls(b=raw[perm], eps=eps, perm=perm)


@dataclass(frozen=True)
class NeumannState:
    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float))
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float))

    def validate(self, tol: float = 1e-10):
        if abs(np.dot(self.q, self.q) - 1.0) > tol:
            raise ValueError("q not on the unit sphere")
        if abs(np.dot(self.p, self.q)) > tol:
            raise ValueError("p not tangent to the sphere")
        return self


@dataclass(frozen=True)
class NeumannTrajectory:
    spec: NeumannSpec
    tau: np.ndarray
    q: np.ndarray
    p: np.ndarray
    meta: dict = field(default_factory=dict)

    def state(self, i: int) -> NeumannState:
        return NeumannState(q=self.q[i], p=self.p[i])


@dataclass(frozen=True)
class Divisor:
    """Signed points (u_j, w_j) with w_j^2 = R(u_j), plus oval assignments."""

    u: np.ndarray
    w: np.ndarray
    oval_index: np.ndarray | None = None


def hamiltonian(nspec: NeumannSpec, q, p) -> float:
    q = np.asarray(q)
    p = np.asarray(p)
    return float(0.5 * np.dot(p, p) + 0.5 * np.sum(nspec.b * q * q))


def gauss_state(spec: QuadricSpec, state: PhaseState, tol_iso: float = TOL_ISO):
    """Sphere image of a quadric phase state: (NeumannSpec, NeumannState).

    Coordinates are permuted into the ascending-b order of the spec.
    """
    iset = integrals(spec, state, tol_iso=tol_iso)
    if iset.isotropic:
        raise IsotropicError("generator line has no sphere image")
    nspec = NeumannSpec.from_quadric(spec, iset.eps)
    q, p = gauss_map(spec, state, iset.J)
    return nspec, NeumannState(q=q[nspec.perm], p=p[nspec.perm])


def integrate_neumann(
    nspec: NeumannSpec,
    state0: NeumannState,
    span,
    rtol: float = 1e-11,
    atol: float = 1e-12,
    max_step: float = np.inf,
    stop_condition=None,
) -> NeumannTrajectory:
    """Integrate qdd = -Bq + nu q, nu = (Bq,q) - (p,p), over tau in span.

    After every accepted step q is renormalized and p re-orthogonalized
    against q.  span = (tau_min, tau_max) containing 0.
    """
    b = nspec.b
    d = b.size

    def fun(_t, u):
        q, p = u[:d], u[d:]
        nu = np.sum(b * q * q) - np.dot(p, p)
        return np.concatenate([p, -b * q + nu * q])

    def post(_t, u):
        q, p = u[:d].copy(), u[d:].copy()
        q /= np.linalg.norm(q)
        p -= np.dot(p, q) * q
        return np.concatenate([q, p])

    t0, t1 = float(span[0]), float(span[1])
    if not (t0 <= 0.0 <= t1):
        raise ValueError("span must contain tau = 0")
    u0 = np.concatenate([state0.q, state0.p])
    kwargs = dict(rtol=rtol, atol=atol, max_step=max_step, post_step=post,
                  stop_condition=stop_condition)
    if t0 < 0 and t1 > 0:
        back = rk.integrate_adaptive(fun, 0.0, u0, t0, **kwargs)
        fwd = rk.integrate_adaptive(fun, 0.0, u0, t1, **kwargs)
        res = rk.merge_bidirectional(back, fwd)
    elif t1 > 0:
        res = rk.integrate_adaptive(fun, 0.0, u0, t1, **kwargs)
    else:
        res = rk.integrate_adaptive(fun, 0.0, u0, t0, **kwargs)
        res = rk.OdeResult(t=res.t[::-1], y=res.y[::-1], f=res.f[::-1],
                           n_steps=res.n_steps, n_rejected=res.n_rejected)
    meta = {"steps": res.n_steps, "rejected": res.n_rejected}
    return NeumannTrajectory(spec=nspec, tau=res.t, q=res.y[:, :d],
                             p=res.y[:, d:], meta=meta)


def neumann_integrals(nspec: NeumannSpec, q, p) -> np.ndarray:
    """First integrals F_k(p, q) = q_k^2 + sum_{j!=k} (p_k q_j - p_j q_k)^2/(b_k - b_j).

    They satisfy sum F_k = 1 and sum b_k F_k = 2H.
    """
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    b = nspec.b
    cross = np.outer(p, q) - np.outer(q, p)  # cross[k, j] = p_k q_j - p_j q_k
    diff = b[:, None] - b[None, :]
    np.fill_diagonal(diff, 1.0)
    terms = cross**2 / diff
    np.fill_diagonal(terms, 0.0)
    return q * q + terms.sum(axis=1)


def psi_raw(b, q, p, u: float) -> float:
    """(1 + (R_u p, p))(R_u q, q) - (R_u p, q)^2 with R_u = (uI - diag(b))^{-1}."""
    b = np.asarray(b, dtype=float)
    gaps = u - b
    if np.min(np.abs(gaps)) < _POLE_TOL:
        raise PoleError(f"u={u:g} too close to a potential eigenvalue")
    r = 1.0 / gaps
    rpp = np.sum(r * p * p)
    rqq = np.sum(r * q * q)
    rpq = np.sum(r * p * q)
    return float((1.0 + rpp) * rqq - rpq * rpq)


def psi_u(nspec: NeumannSpec, state: NeumannState, u: float) -> float:
    """Generating function of the sphere-system integrals at parameter u.

    Equals sum_k F_k(p,q)/(u - b_k); vanishes at u = 0 exactly on images of
    quadric geodesics under the Gauss map.
    """
    return psi_raw(nspec.b, state.q, state.p, u)


def sphere_elliptic_coords(nspec: NeumannSpec, q, warn_degenerate: bool = True):
    """Separation coordinates u_1 < ... < u_n: roots of sum q_i^2/(u - b_i) = 0.

    Interlacing b_0 < u_1 < b_1 < ... < u_n < b_n holds; a vanishing
    component q_i collapses the adjacent root onto b_i (degenerate, warned).
    """
    q = np.asarray(q, dtype=float)
    roots, degen = interlaced_roots(q * q, nspec.b, 0.0)
    if warn_degenerate and degen.any():
        warnings.warn(
            "vanishing sphere coordinate(s): separation root(s) collide with b",
            DegenerateCoordinateWarning,
            stacklevel=2,
        )
    return roots


def reconstruct_q_squared(nspec: NeumannSpec, u) -> np.ndarray:
    """Inverse of the separation coordinates: q_i^2 from the roots u_j."""
    b = nspec.b
    u = np.asarray(u, dtype=float)
    out = np.empty(b.size)
    for i in range(b.size):
        num = np.prod(b[i] - u)
        den = np.prod(np.delete(b[i] - b, i))
        out[i] = num / den
    return out


def dubrovin_rhs(curve, u, signs, tol_collision: float = 1e-10) -> np.ndarray:
    """du_j/dtau = w_j / prod_{i!=j}(u_j - u_i) with w_j = signs_j * sqrt(R(u_j)).

    curve must expose R(u) (see SpectralCurve).  Raises CollisionError when
    two coordinates are closer than tol_collision.
    """
    u = np.asarray(u, dtype=float)
    signs = np.asarray(signs, dtype=float)
    n = u.size
    out = np.empty(n)
    for j in range(n):
        denom = np.prod(np.delete(u[j] - u, j)) if n > 1 else 1.0
        if abs(denom) < tol_collision:
            raise CollisionError("separation coordinates collided")
        Ru = max(curve.R(u[j]), 0.0)
        out[j] = signs[j] * np.sqrt(Ru) / denom
    return out


def lifted_divisor(nspec: NeumannSpec, state: NeumannState, curve=None) -> Divisor:
    """Divisor points (u_j, w_j) with the sign of w_j fixed by p and q.

    w_j = -2 (R_{u_j} p, q) prod_k (u_j - b_k); this resolves the square root
    of R(u_j) without tracking continuity.  The sign is oriented so that the
    separation coordinates obey du_j/dtau = w_j / prod_{i!=j}(u_j - u_i)
    along the flow (checked against trajectory finite differences), which
    makes the leading linearized coordinate advance with slope +1.  Oval
    indices are attached when a curve is supplied.
    """
    u = sphere_elliptic_coords(nspec, state.q, warn_degenerate=False)
    b = nspec.b
    w = np.empty(u.size)
    for j, uj in enumerate(u):
        gaps = uj - b
        small = np.abs(gaps) < 1e-13
        if small.any():
            w[j] = 0.0  # branch point: sqrt(R) = 0
            continue
        rpq = np.sum(state.p * state.q / gaps)
        w[j] = -2.0 * rpq * np.prod(gaps)
    oval_index = None
    if curve is not None:
        oval_index = np.array([curve.oval_of(uj) for uj in u])
    return Divisor(u=u, w=w, oval_index=oval_index)


def knoerrer_time_derivative(spec: QuadricSpec, state: PhaseState, J: float):
    """dx/dtau for a quadric state (velocity rescaled by 1/alpha)."""
    alpha, _ = time_rescale_rate(spec, state.x, state.y, J)
    return state.y / alpha


def verify_knoerrer_identity(spec: QuadricSpec, state: PhaseState, z_samples,
                             tol_iso: float = TOL_ISO) -> float:
    """Max residual of |Bx|^4 Psi^eps_{eps/z}(p, q) = Phi_z(x, dx/dtau).

    The left side uses the sphere image (q, p) and potential diagonal
    eps/a_k; the right side is the quadric tangency function evaluated on the
    rescaled velocity.  Expected ~1e-10 or better for desk-scale states.
    """
    iset = integrals(spec, state, tol_iso=tol_iso)
    if iset.isotropic:
        raise IsotropicError("identity undefined on generator lines")
    eps = iset.eps
    b_raw = eps / spec.axes  # ambient coordinate order
    q, p = gauss_map(spec, state, iset.J)
    xdot = knoerrer_time_derivative(spec, state, iset.J)
    nbx4 = float(np.dot(spec.b * state.x, spec.b * state.x)) ** 2
    worst = 0.0
    for z in np.atleast_1d(z_samples):
        lhs = nbx4 * psi_raw(b_raw, q, p, eps / z)
        rhs = phi_z(spec, state.x, xdot, z)
        worst = max(worst, abs(lhs - rhs))
    return worst
