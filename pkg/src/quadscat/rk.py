"""Embedded Dormand-Prince 5(4) stepper with an optional post-step projection hook.

The projection hook runs after every accepted step, so conserved-quantity tests
exercise the vector field itself rather than a constraint-enforcing integrator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import StepFailure

# Dormand-Prince 5(4) tableau (FSAL).
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# b5 - b4: error estimator weights
_E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0


@dataclass
class OdeResult:
    """Accepted-step record of an adaptive integration."""

    t: np.ndarray
    y: np.ndarray  # shape (n_samples, dim)
    f: np.ndarray  # derivative at each sample, same shape as y
    n_steps: int = 0
    n_rejected: int = 0
    meta: dict = field(default_factory=dict)


def _initial_step(fun, t0, y0, f0, direction, rtol, atol):
    scale = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + h0 * direction * f0
    f1 = fun(t0 + h0 * direction, y1)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1)


def integrate_adaptive(
    fun,
    t0: float,
    y0: np.ndarray,
    t1: float,
    rtol: float = 1e-11,
    atol: float = 1e-12,
    max_step: float = np.inf,
    post_step=None,
    stop_condition=None,
    max_steps: int = 5_000_000,
) -> OdeResult:
    """Integrate y' = fun(t, y) from t0 to t1, recording every accepted step.

    post_step(t, y) may return a corrected state (projection onto a manifold);
    it is applied after acceptance, before the state is recorded.
    stop_condition(t, y), when given, terminates integration early once true
    (checked on accepted samples).
    Raises StepFailure if the step size underflows.
    """
    y0 = np.asarray(y0, dtype=float)
    direction = 1.0 if t1 >= t0 else -1.0
    t, y = float(t0), y0.copy()
    f = fun(t, y)

    ts, ys, fs = [t], [y.copy()], [f.copy()]
    h = min(_initial_step(fun, t, y, f, direction, rtol, atol), max_step)
    n_steps = n_rejected = 0
    k = np.empty((7, y.size))

    while direction * (t1 - t) > 0:
        if n_steps + n_rejected > max_steps:
            raise StepFailure(f"step budget exceeded at t={t:g}")
        h = min(h, abs(t1 - t), max_step)
        if h < 1e-14 * max(1.0, abs(t)):
            raise StepFailure(f"step size underflow at t={t:g}")
        hd = h * direction

        k[0] = f
        for i in range(1, 7):
            yi = y + hd * (k[:i].T @ _A[i])
            k[i] = fun(t + _C[i] * hd, yi)
        y_new = y + hd * (k.T @ _B5)
        # k[6] was evaluated at y_new (FSAL): reuse as next first stage
        f_new = k[6]

        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = np.sqrt(np.mean(((hd * (k.T @ _E)) / scale) ** 2))

        if err <= 1.0:
            t = t + hd
            y = y_new
            if post_step is not None:
                corrected = post_step(t, y)
                if corrected is not None:
                    y = corrected
                    f_new = fun(t, y)
            f = f_new
            ts.append(t)
            ys.append(y.copy())
            fs.append(f.copy())
            n_steps += 1
            if stop_condition is not None and stop_condition(t, y):
                break
            factor = _MAX_FACTOR if err == 0 else min(
                _MAX_FACTOR, _SAFETY * err ** -0.2
            )
            h *= factor
        else:
            n_rejected += 1
            h *= max(_MIN_FACTOR, _SAFETY * err ** -0.2)

    return OdeResult(
        t=np.asarray(ts),
        y=np.asarray(ys),
        f=np.asarray(fs),
        n_steps=n_steps,
        n_rejected=n_rejected,
    )


def hermite_eval(t_nodes, y_nodes, f_nodes, t):
    """Evaluate the cubic Hermite interpolant of an OdeResult at times t."""
    from scipy.interpolate import CubicHermiteSpline

    return CubicHermiteSpline(t_nodes, y_nodes, f_nodes, axis=0)(t)


def merge_bidirectional(back: OdeResult, fwd: OdeResult) -> OdeResult:
    """Join a backward and a forward run sharing the same initial sample."""
    t = np.concatenate([back.t[::-1], fwd.t[1:]])
    y = np.concatenate([back.y[::-1], fwd.y[1:]])
    f = np.concatenate([back.f[::-1], fwd.f[1:]])
    return OdeResult(
        t=t,
        y=y,
        f=f,
        n_steps=back.n_steps + fwd.n_steps,
        n_rejected=back.n_rejected + fwd.n_rejected,
    )
