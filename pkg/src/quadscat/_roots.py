"""Root extraction for rational functions of the form const + sum w_i/(z - p_i).

Such functions are strictly decreasing between consecutive poles, so every
bracketed interval holds exactly one root; bisection cannot miss and a single
Newton polish restores full accuracy.
"""

from __future__ import annotations

import numpy as np

_GUARD = 1e-9
_BISECT_TOL = 1e-13


def _f(z, weights, poles, const):
    return const + np.sum(weights / (z - poles))


def _fprime(z, weights, poles):
    return -np.sum(weights / (z - poles) ** 2)


def _bisect(lo, hi, weights, poles, const):
    flo = _f(lo, weights, poles, const)
    fhi = _f(hi, weights, poles, const)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        # root squeezed into the guard band next to a pole
        return lo if abs(flo) < abs(fhi) else hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo <= _BISECT_TOL * max(1.0, abs(lo), abs(hi)):
            break
        fm = _f(mid, weights, poles, const)
        if fm == 0.0:
            return mid
        if flo * fm < 0:
            hi = mid
        else:
            lo, flo = mid, fm
    z = 0.5 * (lo + hi)
    fp = _fprime(z, weights, poles)
    if fp != 0.0:
        z_new = z - _f(z, weights, poles, const) / fp
        if lo <= z_new <= hi:
            z = z_new
    return z


def interlaced_roots(weights, poles, const, active_tol=1e-22):
    """All real roots of const + sum w_i/(z - p_i), w_i >= 0, poles ascending.

    Poles with negligible weight are deactivated; each contributes an exact
    root at the pole itself (flagged as degenerate).  Returns (roots, degenerate)
    with roots ascending and degenerate a parallel boolean array.
    """
    weights = np.asarray(weights, dtype=float)
    poles = np.asarray(poles, dtype=float)
    wscale = max(weights.sum(), 1e-300)
    active = weights > active_tol * wscale
    p_act = poles[active]
    w_act = weights[active]
    span = max(p_act[-1] - p_act[0], 1.0) if p_act.size else 1.0
    guard = _GUARD * span

    roots = []
    degen = []
    for p in poles[~active]:
        roots.append(p)
        degen.append(True)

    if p_act.size:
        # one root between each consecutive pair of active poles
        for lo_p, hi_p in zip(p_act[:-1], p_act[1:]):
            roots.append(_bisect(lo_p + guard, hi_p - guard, w_act, p_act, const))
            degen.append(False)
        if const > 0:
            # f -> const > 0 far left, -inf left of the first pole
            lo = p_act[0] - max(span, 2.0 * wscale / const)
            roots.append(_bisect(lo, p_act[0] - guard, w_act, p_act, const))
            degen.append(False)
        elif const < 0:
            # f -> +inf right of the last pole, const < 0 far right
            hi = p_act[-1] + max(span, 2.0 * wscale / (-const))
            roots.append(_bisect(p_act[-1] + guard, hi, w_act, p_act, const))
            degen.append(False)

    roots = np.asarray(roots)
    degen = np.asarray(degen, dtype=bool)
    order = np.argsort(roots)
    return roots[order], degen[order]
