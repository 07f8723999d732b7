"""The conformally flat companion metric (B dx, dx)/|Bx|^2, its isometric
inversion, geodesics through Christoffel symbols, and the regular extension of
everything to the projective closure of the quadric.

The companion metric shares its unparametrized geodesics with the induced
Euclidean metric on the quadric; its natural parameter is the rescaled time
of the sphere-system correspondence.  Unlike the induced metric it stays
regular across the hyperplane at infinity, which is what makes scattering
states integrable straight through.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import rk
from .errors import AsymptoticConeError, ChartError, SingularPoint
from .quadric import Kind, QuadricSpec


@dataclass(frozen=True)
class MetricTensor:
    g: np.ndarray
    signature: tuple | None = None


@dataclass(frozen=True)
class ProjectivePoint:
    """Homogeneous coordinates, unit-normalized with first nonzero entry > 0."""

    xi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "xi", normalize_projective(self.xi))


def normalize_projective(xi) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    nrm = np.linalg.norm(xi)
    if nrm == 0:
        raise ValueError("zero vector is not a projective point")
    xi = xi / nrm
    nz = np.nonzero(np.abs(xi) > 1e-14)[0]
    if nz.size and xi[nz[0]] < 0:
        xi = -xi
    return xi


def _bx_norm2(b, x):
    bx = b * x
    return bx, float(np.dot(bx, bx))


def metric1_at(b, x) -> MetricTensor:
    """Companion metric at an ambient point: diag(b) / |Bx|^2."""
    b = np.asarray(b, dtype=float)
    x = np.asarray(x, dtype=float)
    _, nbx2 = _bx_norm2(b, x)
    if nbx2 == 0.0:
        raise SingularPoint("metric undefined where Bx = 0")
    g = np.diag(b / nbx2)
    neg = int(np.sum(b < 0))
    return MetricTensor(g=g, signature=(b.size - neg, neg))


def involution_sigma(b, x, tol: float = 1e-10) -> np.ndarray:
    """x -> x / (Bx, x): isometry of the companion metric fixing the quadric."""
    b = np.asarray(b, dtype=float)
    x = np.asarray(x, dtype=float)
    s = float(np.sum(b * x * x))
    if abs(s) < tol:
        raise AsymptoticConeError("inversion undefined on the asymptotic cone")
    return x / s


def sigma_jacobian(b, x) -> np.ndarray:
    """Jacobian of the inversion, for pullback checks."""
    b = np.asarray(b, dtype=float)
    x = np.asarray(x, dtype=float)
    s = float(np.sum(b * x * x))
    return np.eye(x.size) / s - 2.0 * np.outer(x, b * x) / s**2


def grad_log_gamma(b, x) -> np.ndarray:
    """Gradient of log gamma, gamma = |Bx|^{-1}: entries -b_k^2 x_k / |Bx|^2."""
    bx, nbx2 = _bx_norm2(np.asarray(b, dtype=float), np.asarray(x, dtype=float))
    return -np.asarray(b) * bx / nbx2


def christoffel(b, x) -> np.ndarray:
    """All Christoffel symbols of the companion metric at x.

    Gamma^i_{ik} = Gamma^i_{ki} = d_k log gamma for every k,
    Gamma^i_{jj} = -(b_j/b_i) d_i log gamma for j != i, zero otherwise.
    """
    b = np.asarray(b, dtype=float)
    x = np.asarray(x, dtype=float)
    _, nbx2 = _bx_norm2(b, x)
    if nbx2 == 0.0:
        raise SingularPoint("metric undefined where Bx = 0")
    d = x.size
    g = grad_log_gamma(b, x)
    gam = np.zeros((d, d, d))
    for i in range(d):
        gam[i, i, :] = g
        gam[i, :, i] = g
        for j in range(d):
            if j != i:
                gam[i, j, j] = -(b[j] / b[i]) * g[i]
    return gam


def metric1_geodesic_rhs(b):
    """Acceleration of the companion-metric geodesic equation.

    xdd = -2 (gamma'/gamma) xd - ((B xd, xd)/|Bx|^2) Bx, which is the
    contracted form of the Christoffel symbols above.
    """
    b = np.asarray(b, dtype=float)

    def fun(_t, u):
        d = u.size // 2
        x, v = u[:d], u[d:]
        bx = b * x
        nbx2 = np.dot(bx, bx)
        if nbx2 < 1e-300:
            raise SingularPoint("reached Bx = 0")
        glog_dot = -np.dot(bx, b * v) / nbx2  # gamma'/gamma along v
        acc = -2.0 * glog_dot * v - (np.sum(b * v * v) / nbx2) * bx
        return np.concatenate([v, acc])

    return fun


@dataclass(frozen=True)
class AmbientTrajectory:
    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    meta: dict = field(default_factory=dict)


def integrate_metric1_geodesic(b, x0, v0, span, rtol: float = 1e-11,
                               atol: float = 1e-12, max_step: float = np.inf,
                               r_stop: float | None = None) -> AmbientTrajectory:
    """Geodesic of the companion metric in ambient coordinates.

    No constraint is enforced: initial data tangent to the quadric staying on
    it is the content of the totally-geodesic property, so drift is a test
    output rather than something the integrator hides.  Unbounded geodesics
    reach infinity at finite parameter; r_stop ends the run at that radius
    instead of underflowing the step size.
    """
    u0 = np.concatenate([np.asarray(x0, float), np.asarray(v0, float)])
    fun = metric1_geodesic_rhs(b)
    t0, t1 = float(span[0]), float(span[1])
    stop = None
    if r_stop is not None:
        d_half = u0.size // 2

        def stop(_t, u):
            return np.dot(u[:d_half], u[:d_half]) > r_stop * r_stop

    res = rk.integrate_adaptive(fun, t0, u0, t1, rtol=rtol, atol=atol,
                                max_step=max_step, stop_condition=stop)
    d = u0.size // 2
    meta = {"steps": res.n_steps, "rejected": res.n_rejected}
    return AmbientTrajectory(t=res.t, x=res.y[:, :d], v=res.y[:, d:], meta=meta)


# ---------------------------------------------------------------------------
# projective closure: chart at xi_0 != 0 and the regular metric at infinity


def _chart_sign(kind: Kind) -> float:
    if kind is Kind.ONE_SHEETED:
        return 1.0
    if kind is Kind.TWO_SHEETED:
        return -1.0
    raise ChartError("projective closure handled for hyperboloids")


def chart_residual(b, kind: Kind, y) -> float:
    """Residual of the chart-0 surface equation b_0 + sum b_i y_i^2 = s y_{n+1}^2."""
    b = np.asarray(b, dtype=float)
    y = np.asarray(y, dtype=float)
    s = _chart_sign(kind)
    return float(b[0] + np.sum(b[1:] * y[:-1] ** 2) - s * y[-1] ** 2)


def restricted_infinity_metric(b, kind: Kind, y, chart_index: int = 0,
                               tol: float = 1e-8) -> MetricTensor:
    """The companion metric written in the chart covering infinity.

    In the chart xi_k != 0 with coordinates y_j = xi_j / xi_k the restriction
    to the closure reads
        (sum_{i != k} b_i dy_i^2 - s dy_{n+1}^2) / (b_k^2 + sum_{i != k} b_i^2 y_i^2),
    s = +1 one-sheeted, -1 two-sheeted.  Finite and nondegenerate on the
    tangent space even at y_{n+1} = 0 (the points at infinity).
    """
    b = np.asarray(b, dtype=float)
    y = np.asarray(y, dtype=float)
    s = _chart_sign(kind)
    if chart_index != 0:
        order = np.r_[chart_index, np.delete(np.arange(b.size), chart_index)]
        b = np.r_[b[order[0]], b[order[1:]]]
    if y.size != b.size:
        raise ChartError("chart coordinates must have length n+1")
    resid = b[0] + np.sum(b[1:] * y[:-1] ** 2) - s * y[-1] ** 2
    if abs(resid) > tol:
        raise ChartError(f"chart equation violated by {resid:g}")
    den = b[0] ** 2 + np.sum(b[1:] ** 2 * y[:-1] ** 2)
    diag = np.concatenate([b[1:], [-s]]) / den
    g = np.diag(diag)
    neg = int(np.sum(diag < 0))
    return MetricTensor(g=g, signature=(diag.size - neg, neg))


def affine_to_chart0(x, v=None):
    """Transition from affine coordinates x (xi_{n+1}=1 chart) to the chart
    at xi_0 != 0: y = (x_1/x_0, ..., x_n/x_0, 1/x_0), with the velocity pushed
    through the Jacobian when given."""
    x = np.asarray(x, dtype=float)
    if x[0] == 0.0:
        raise ChartError("point not in the xi_0 chart")
    y = np.empty(x.size)
    y[:-1] = x[1:] / x[0]
    y[-1] = 1.0 / x[0]
    if v is None:
        return y
    v = np.asarray(v, dtype=float)
    w = np.empty(x.size)
    w[:-1] = (v[1:] * x[0] - x[1:] * v[0]) / x[0] ** 2
    w[-1] = -v[0] / x[0] ** 2
    return y, w


def chart0_to_affine(y, w=None):
    """Inverse transition (only for y_{n+1} != 0)."""
    y = np.asarray(y, dtype=float)
    if y[-1] == 0.0:
        raise ChartError("point at infinity has no affine image")
    x = np.empty(y.size)
    x[0] = 1.0 / y[-1]
    x[1:] = y[:-1] / y[-1]
    if w is None:
        return x
    w = np.asarray(w, dtype=float)
    v = np.empty(y.size)
    v[0] = -w[-1] / y[-1] ** 2
    v[1:] = (w[:-1] * y[-1] - y[:-1] * w[-1]) / y[-1] ** 2
    return x, v


def infinity_chart_geodesic(b, kind: Kind, y0, w0, span, rtol: float = 1e-11,
                            atol: float = 1e-12, max_step: float = np.inf
                            ) -> AmbientTrajectory:
    """Geodesic of the restricted metric in the chart covering infinity.

    The chart surface g(y) = b_0 + (Btilde y, y) = 0 with
    Btilde = diag(b_1..b_n, -s) is handled as a constrained Lagrangian system;
    every coefficient stays regular at y_{n+1} = 0, so trajectories cross the
    points at infinity like any other point.  Post-step projection keeps the
    constraint at roundoff.
    """
    b = np.asarray(b, dtype=float)
    s = _chart_sign(kind)
    bt = np.concatenate([b[1:], [-s]])
    b0 = b[0]

    def fun(_t, u):
        d = u.size // 2
        y, w = u[:d], u[d:]
        den = b0**2 + np.sum(b[1:] ** 2 * y[:-1] ** 2)
        btww = np.sum(bt * w * w)
        dden = 2.0 * np.sum(b[1:] ** 2 * y[:-1] * w[:-1])
        # (1/2) Btilde^{-1} grad(den) = (b_1 y_1, .., b_n y_n, 0)
        binv_grad = np.concatenate([b[1:] * y[:-1], [0.0]])
        acc = (dden / den) * w - (btww / den) * binv_grad + (b0 * btww / den) * y
        return np.concatenate([w, acc])

    def post(_t, u):
        d = u.size // 2
        y, w = u[:d].copy(), u[d:].copy()
        bty = bt * y
        g = b0 + np.dot(bty, y)
        for _ in range(3):
            if abs(g) < 1e-15:
                break
            dg = 2.0 * np.dot(bty, bty)
            if dg == 0.0:
                break
            y = y - (g / dg) * bty
            bty = bt * y
            g = b0 + np.dot(bty, y)
        w = w - (np.dot(bty, w) / np.dot(bty, bty)) * bty
        return np.concatenate([y, w])

    u0 = np.concatenate([np.asarray(y0, float), np.asarray(w0, float)])
    t0, t1 = float(span[0]), float(span[1])
    if not (t0 <= 0.0 <= t1):
        raise ValueError("span must contain 0 (initial data is taken there)")
    kwargs = dict(rtol=rtol, atol=atol, max_step=max_step, post_step=post)
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
    d = u0.size // 2
    meta = {"steps": res.n_steps, "rejected": res.n_rejected}
    return AmbientTrajectory(t=res.t, x=res.y[:, :d], v=res.y[:, d:], meta=meta)


def projective_knoerrer(b, xi) -> ProjectivePoint:
    """Projective image [b_0 xi_0 : ... : b_n xi_n] of a closure point.

    In the affine chart this is the class of Bx; dropping xi_{n+1} and
    rescaling extends it continuously to the points at infinity.
    """
    b = np.asarray(b, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if xi.size != b.size + 1:
        raise ValueError("expected homogeneous coordinates of length n+2")
    return ProjectivePoint(xi=b * xi[:-1])


def chart0_point_to_homogeneous(y) -> np.ndarray:
    """Homogeneous coordinates of a chart-0 point: (1, y_1..y_n, y_{n+1})."""
    y = np.asarray(y, dtype=float)
    return np.concatenate([[1.0], y])
