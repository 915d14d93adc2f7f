"""Bracketed Newton-bisection for strictly monotone functions.

Both solvers keep a sign-change bracket at all times and take a Newton step
whenever it stays inside the bracket; otherwise they bisect.  They stop once
the step is at the level of rounding, so the residual is usually far below
the ``1e-12 * (1 + |target|)`` acceptance level.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import RootBracketError

_EPS = np.finfo(float).eps
MAX_ITER = 200


def monotone_root(func, dfunc, target, lo, hi, rtol=1e-12):
    """Solve ``func(x) == target`` on ``[lo, hi]`` for a monotone ``func``.

    ``dfunc`` is the derivative used for the Newton steps.  Raises
    :class:`RootBracketError` if ``func - target`` does not change sign on the
    bracket.
    """
    lo, hi = float(lo), float(hi)
    flo = func(lo) - target
    fhi = func(hi) - target
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise RootBracketError(
            f"no sign change on [{lo!r}, {hi!r}] for target {target!r}"
        )
    increasing = fhi > 0
    tol = rtol * (1.0 + abs(target))
    # secant start
    x = lo - flo * (hi - lo) / (fhi - flo)
    if not lo < x < hi:
        x = 0.5 * (lo + hi)
    best_x, best_r = x, math.inf
    for _ in range(MAX_ITER):
        r = func(x) - target
        if abs(r) < best_r:
            best_x, best_r = x, abs(r)
        if r == 0.0:
            return x
        if (r > 0) == increasing:
            hi = x
        else:
            lo = x
        d = dfunc(x)
        step = r / d if d != 0.0 else math.inf
        xn = x - step
        if not lo < xn < hi:
            xn = 0.5 * (lo + hi)
            step = x - xn
        if abs(step) <= 4 * _EPS * max(1.0, abs(x)) or hi - lo <= 4 * _EPS * max(1.0, abs(x)):
            rn = func(xn) - target
            if abs(rn) < best_r:
                best_x, best_r = xn, abs(rn)
            break
        x = xn
    if best_r > tol and hi - lo > 16 * _EPS * max(1.0, abs(best_x)):
        raise RootBracketError(f"no convergence for target {target!r}")
    return best_x


def monotone_root_array(func, dfunc, target, lo, hi):
    """Vectorised :func:`monotone_root` over arrays of targets and brackets.

    ``func`` and ``dfunc`` must accept arrays.  All sign checks are done up
    front; every element follows the same safeguarded iteration, so results
    are deterministic and independent of the batch they travel in.
    """
    target = np.asarray(target, dtype=float)
    lo = np.broadcast_to(np.asarray(lo, dtype=float), target.shape).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), target.shape).copy()
    flo = func(lo) - target
    fhi = func(hi) - target
    if np.any((flo > 0) & (fhi > 0)) or np.any((flo < 0) & (fhi < 0)):
        raise RootBracketError("no sign change on some brackets")
    increasing = fhi > flo
    with np.errstate(divide="ignore", invalid="ignore"):
        x = lo - flo * (hi - lo) / (fhi - flo)
    x = np.where((x > lo) & (x < hi), x, 0.5 * (lo + hi))
    x = np.where(flo == 0, lo, np.where(fhi == 0, hi, x))
    active = (flo != 0) & (fhi != 0)
    for _ in range(MAX_ITER):
        if not active.any():
            break
        xa = x[active]
        r = func(xa) - target[active]
        inc = increasing[active]
        up = (r > 0) == inc
        hia = np.where(up, xa, hi[active])
        loa = np.where(up, lo[active], xa)
        d = dfunc(xa)
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = xa - r / d
        xn = np.where((xn > loa) & (xn < hia), xn, 0.5 * (loa + hia))
        scale = 4 * _EPS * np.maximum(1.0, np.abs(xa))
        done = (r == 0) | (np.abs(xn - xa) <= scale) | (hia - loa <= scale)
        xn = np.where(r == 0, xa, xn)
        lo[active], hi[active], x[active] = loa, hia, xn
        idx = np.flatnonzero(active)
        active[idx[done]] = False
    return x
