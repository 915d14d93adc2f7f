"""Compiled enumeration kernels for the built-in curves.

Every routine walks heights ``q`` in ascending order and, inside a height,
pairs ``(q1, q2)`` and integers ``p`` lexicographically.  Work for one ``q``
lands in its own output slot, so parallel execution over ``q`` gives the same
bits as a serial run.

``prm`` layout: ``a, b, f(a), f'(a), f''(a), f(b), f'(b), f''(b)``.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit, prange

from ._jit import set_workers  # noqa: F401

PARABOLA, EXPONENTIAL, CIRCLE = 0, 1, 2
THETA1, P_NOT_P0, P0_SMALL, P0_LARGE = 0, 1, 2, 3
EPS = 2.220446049250313e-16


@njit(cache=True)
def _base_f(kind, x):
    if kind == EXPONENTIAL:
        return math.exp(x)
    if kind == CIRCLE:
        return math.sqrt(1.0 - x * x)
    return x * x


@njit(cache=True)
def _base_f1(kind, x):
    if kind == EXPONENTIAL:
        return math.exp(x)
    if kind == CIRCLE:
        return -x / math.sqrt(1.0 - x * x)
    return 2.0 * x


@njit(cache=True)
def ext_f(kind, prm, x):
    if kind == PARABOLA:
        return x * x
    if x > prm[1]:
        d = x - prm[1]
        return prm[5] + prm[6] * d + 0.5 * prm[7] * d * d
    if x < prm[0]:
        d = x - prm[0]
        return prm[2] + prm[3] * d + 0.5 * prm[4] * d * d
    return _base_f(kind, x)


@njit(cache=True)
def ext_f1(kind, prm, x):
    if kind == PARABOLA:
        return 2.0 * x
    if x > prm[1]:
        return prm[6] + prm[7] * (x - prm[1])
    if x < prm[0]:
        return prm[3] + prm[4] * (x - prm[0])
    return _base_f1(kind, x)


@njit(cache=True)
def slope_inv(kind, prm, y):
    """Closed-form inverse of ``-f'`` on the extension."""
    t = -y
    if kind == PARABOLA:
        return 0.5 * t
    if prm[4] > 0:
        if t > prm[6]:
            return prm[1] + (t - prm[6]) / prm[7]
        if t < prm[3]:
            return prm[0] + (t - prm[3]) / prm[4]
    else:
        if t < prm[6]:
            return prm[1] + (t - prm[6]) / prm[7]
        if t > prm[3]:
            return prm[0] + (t - prm[3]) / prm[4]
    if kind == EXPONENTIAL:
        return math.log(t)
    return -t / math.sqrt(1.0 + t * t)


@njit(cache=True)
def _F(kind, prm, q1, q2, x):
    return q1 * x + q2 * ext_f(kind, prm, x)


@njit(cache=True)
def _dF(kind, prm, q1, q2, x):
    return q1 + q2 * ext_f1(kind, prm, x)


@njit(cache=True)
def _solve_level(kind, prm, q1, q2, c, u, v, Fu, Fv):
    lo, hi = u, v
    inc = Fv > Fu
    x = u + (c - Fu) * (v - u) / (Fv - Fu)
    if not (lo < x < hi):
        x = 0.5 * (lo + hi)
    for _ in range(200):
        r = _F(kind, prm, q1, q2, x) - c
        if r == 0.0:
            return x
        if (r > 0) == inc:
            hi = x
        else:
            lo = x
        d = _dF(kind, prm, q1, q2, x)
        xn = x - r / d if d != 0.0 else 0.5 * (lo + hi)
        if not (lo < xn < hi):
            xn = 0.5 * (lo + hi)
        tol = 4.0 * EPS * max(1.0, abs(x))
        if abs(xn - x) <= tol or hi - lo <= tol:
            return xn
        x = xn
    return x


# ----------------------------------------------------------------------------
# pair setup: returns
# (theta1, split, x0, Fx0, Fa, Fb, p0, norm)
# ----------------------------------------------------------------------------


@njit(cache=True)
def pair_setup(kind, prm, M, q1, q2):
    a, b = prm[0], prm[1]
    theta1 = abs(q1) > 2.0 * M * abs(q2)
    x0 = np.nan
    Fx0 = np.nan
    p0 = 0
    norm = np.nan
    split = False
    if not theta1:
        if kind == PARABOLA:
            x0 = -q1 / (2.0 * q2)
            sig = 1 if q2 > 0 else -1
            D = 4 * abs(q2)
            N = -sig * q1 * q1
            Fx0 = N / D
            num = 2 * N - D
            den = 2 * D
            p0 = -((-num) // den)
            norm = abs(N - p0 * D) / D
        else:
            x0 = slope_inv(kind, prm, q1 / q2)
            Fx0 = _F(kind, prm, q1, q2, x0)
            p0 = int(math.ceil(Fx0 - 0.5))
            norm = abs(Fx0 - p0)
        split = a < x0 < b
    Fa = _F(kind, prm, q1, q2, a)
    Fb = _F(kind, prm, q1, q2, b)
    return theta1, split, x0, Fx0, Fa, Fb, p0, norm


@njit(cache=True)
def _generic_piece(kind, prm, q1, q2, u, v, Fu, Fv, clo, chi):
    if Fu < Fv:
        Fmin, Fmax, xmin, xmax = Fu, Fv, u, v
    else:
        Fmin, Fmax, xmin, xmax = Fv, Fu, v, u
    lo_c = max(clo, Fmin)
    hi_c = min(chi, Fmax)
    if not lo_c < hi_c:
        return False, 0.0, 0.0
    xl = xmin if lo_c == Fmin else _solve_level(kind, prm, q1, q2, lo_c, u, v, Fu, Fv)
    xh = xmax if hi_c == Fmax else _solve_level(kind, prm, q1, q2, hi_c, u, v, Fu, Fv)
    if xl < xh:
        return True, xl, xh
    return True, xh, xl


@njit(cache=True)
def _generic_eval(kind, prm, q1, q2, st, p, ps):
    theta1, split, x0, Fx0, Fa, Fb, p0, norm = st
    a, b = prm[0], prm[1]
    clo = p - ps
    chi = p + ps
    if split:
        ok0, l0, r0 = _generic_piece(kind, prm, q1, q2, a, x0, Fa, Fx0, clo, chi)
        ok1, l1, r1 = _generic_piece(kind, prm, q1, q2, x0, b, Fx0, Fb, clo, chi)
    else:
        ok0, l0, r0 = _generic_piece(kind, prm, q1, q2, a, b, Fa, Fb, clo, chi)
        ok1, l1, r1 = False, 0.0, 0.0
    if ok0 and ok1:
        if r0 == x0 and l1 == x0:
            return 1, l0, r1, 0.0, 0.0, (r0 - l0) + (r1 - l1)
        return 2, l0, r0, l1, r1, (r0 - l0) + (r1 - l1)
    if ok0:
        return 1, l0, r0, 0.0, 0.0, r0 - l0
    if ok1:
        return 1, l1, r1, 0.0, 0.0, r1 - l1
    return 0, 0.0, 0.0, 0.0, 0.0, 0.0


@njit(cache=True)
def _parab_piece(aq, E, ps, m0, m1, xm0, xm1, side, x0):
    # |s| in [m0, m1] maps to w = aq*s^2; target |w - E| < ps.  The window
    # width is formed from the room on either side so ps keeps its digits
    # even when E is large.
    up = aq * m1 * m1 - E
    dn = E - aq * m0 * m0
    num = min(ps, up) + min(ps, dn)
    if not num > 0.0:
        return False, 0.0, 0.0, 0.0
    clamp_lo = dn <= ps
    clamp_hi = up <= ps
    slo = m0 if clamp_lo else math.sqrt((E - ps) / aq)
    shi = m1 if clamp_hi else math.sqrt((E + ps) / aq)
    length = num / (aq * (slo + shi))
    if side > 0:
        xl = xm0 if clamp_lo else x0 + slo
        xh = xm1 if clamp_hi else x0 + shi
    else:
        xl = xm1 if clamp_hi else x0 - shi
        xh = xm0 if clamp_lo else x0 - slo
    return True, xl, xh, length


@njit(cache=True)
def _parab_eval(prm, q1, q2, st, p, ps):
    a, b = prm[0], prm[1]
    if q2 == 0:
        # linear form; q1 != 0 here
        Fa, Fb = q1 * a, q1 * b
        Fmin, Fmax = min(Fa, Fb), max(Fa, Fb)
        up = Fmax - p
        dn = p - Fmin
        num = min(ps, up) + min(ps, dn)
        if not num > 0.0:
            return 0, 0.0, 0.0, 0.0, 0.0, 0.0
        xl = (a if Fa == Fmin else b) if dn <= ps else (p - ps) / q1
        xh = (b if Fb == Fmax else a) if up <= ps else (p + ps) / q1
        if xl > xh:
            xl, xh = xh, xl
        return 1, xl, xh, 0.0, 0.0, num / abs(q1)
    aq = float(abs(q2))
    x0 = -q1 / (2.0 * q2)
    E = (4 * q2 * p + q1 * q1) / (4.0 * aq)
    sa = a - x0
    sb = b - x0
    if sa >= 0.0:
        ok, l0, r0, L = _parab_piece(aq, E, ps, sa, sb, a, b, 1, x0)
        if ok:
            return 1, l0, r0, 0.0, 0.0, L
        return 0, 0.0, 0.0, 0.0, 0.0, 0.0
    if sb <= 0.0:
        ok, l0, r0, L = _parab_piece(aq, E, ps, -sb, -sa, b, a, -1, x0)
        if ok:
            return 1, l0, r0, 0.0, 0.0, L
        return 0, 0.0, 0.0, 0.0, 0.0, 0.0
    ok0, l0, r0, L0 = _parab_piece(aq, E, ps, 0.0, -sa, x0, a, -1, x0)
    ok1, l1, r1, L1 = _parab_piece(aq, E, ps, 0.0, sb, x0, b, 1, x0)
    if ok0 and ok1:
        if r0 == x0 and l1 == x0:
            return 1, l0, r1, 0.0, 0.0, L0 + L1
        return 2, l0, r0, l1, r1, L0 + L1
    if ok0:
        return 1, l0, r0, 0.0, 0.0, L0
    if ok1:
        return 1, l1, r1, 0.0, 0.0, L1
    return 0, 0.0, 0.0, 0.0, 0.0, 0.0


@njit(cache=True)
def eval_triple(kind, prm, q1, q2, st, p, ps):
    if kind == PARABOLA:
        return _parab_eval(prm, q1, q2, st, p, ps)
    return _generic_eval(kind, prm, q1, q2, st, p, ps)


@njit(cache=True)
def p_range(kind, prm, q1, q2, st, ps):
    """Inclusive range of ``p`` with nonempty solution sets (may be empty)."""
    theta1, split, x0, Fx0, Fa, Fb, p0, norm = st
    Fmin = min(Fa, Fb)
    Fmax = max(Fa, Fb)
    if split:
        Fmin = min(Fmin, Fx0)
        Fmax = max(Fmax, Fx0)
    pl = int(math.floor(Fmin - ps))
    ph = int(math.ceil(Fmax + ps))
    while pl <= ph and eval_triple(kind, prm, q1, q2, st, pl, ps)[0] == 0:
        pl += 1
    while ph >= pl and eval_triple(kind, prm, q1, q2, st, ph, ps)[0] == 0:
        ph -= 1
    return pl, ph


@njit(cache=True)
def triple_case(st, p, ps):
    theta1, split, x0, Fx0, Fa, Fb, p0, norm = st
    if theta1:
        return THETA1
    if p != p0:
        return P_NOT_P0
    if norm < 2.0 * ps:
        return P0_SMALL
    return P0_LARGE


@njit(cache=True)
def triple_bound(case, q, q1, q2, p, p0, norm, ps, q0, K):
    """Explicit envelope for one solution set; ``nan`` where it does not apply."""
    if case == THETA1:
        return K[0] * ps / abs(q1)
    if case == P_NOT_P0:
        if q < q0:
            return np.nan
        return K[1] * ps / math.sqrt(abs(q2) * abs(p - p0))
    if case == P0_SMALL:
        return K[2] * math.sqrt(ps / abs(q2))
    return K[3] * ps / math.sqrt(abs(q2) * norm)


@njit(cache=True)
def _n_q2(q, q1):
    return 2 * q + 1 if abs(q1) == q else 2


@njit(cache=True)
def _q2_at(q, q1, j):
    if abs(q1) == q:
        return -q + j
    return -q if j == 0 else q


@njit(parallel=True, cache=True)
def count_triples(kind, prm, M, psi, qlo, qhi):
    nq = qhi - qlo + 1
    out = np.zeros(nq, dtype=np.int64)
    for iq in prange(nq):
        q = qlo + iq
        ps = psi[q]
        tot = 0
        for q1 in range(-q, q + 1):
            for j in range(_n_q2(q, q1)):
                q2 = _q2_at(q, q1, j)
                st = pair_setup(kind, prm, M, q1, q2)
                pl, ph = p_range(kind, prm, q1, q2, st, ps)
                if ph >= pl:
                    tot += ph - pl + 1
        out[iq] = tot
    return out


@njit(parallel=True, cache=True)
def fill_triples(kind, prm, M, psi, qlo, qhi, offsets, ints, parts, lengths):
    """Write every nonempty triple.

    ``ints[i] = (q1, q2, p, q, case, nparts, p0)``, ``parts[i] = (l0, r0, l1, r1)``.
    """
    nq = qhi - qlo + 1
    for iq in prange(nq):
        q = qlo + iq
        ps = psi[q]
        idx = offsets[iq]
        for q1 in range(-q, q + 1):
            for j in range(_n_q2(q, q1)):
                q2 = _q2_at(q, q1, j)
                st = pair_setup(kind, prm, M, q1, q2)
                pl, ph = p_range(kind, prm, q1, q2, st, ps)
                for p in range(pl, ph + 1):
                    n, l0, r0, l1, r1, L = eval_triple(kind, prm, q1, q2, st, p, ps)
                    ints[idx, 0] = q1
                    ints[idx, 1] = q2
                    ints[idx, 2] = p
                    ints[idx, 3] = q
                    ints[idx, 4] = triple_case(st, p, ps)
                    ints[idx, 5] = n
                    ints[idx, 6] = st[6]
                    parts[idx, 0] = l0
                    parts[idx, 1] = r0
                    parts[idx, 2] = l1
                    parts[idx, 3] = r1
                    lengths[idx] = L
                    idx += 1


@njit(cache=True)
def _kadd(total, comp, iq, c, si, v):
    s0 = total[iq, c, si]
    t = s0 + v
    if abs(s0) >= abs(v):
        comp[iq, c, si] += (s0 - t) + v
    else:
        comp[iq, c, si] += (v - t) + s0
    total[iq, c, si] = t


@njit(parallel=True, cache=True)
def accumulate(kind, prm, M, psi, qlo, qhi, svals, q0, K, rtol, check):
    """Per-height case sums of ``|mu|^s`` plus envelope statistics.

    Only pairs with ``q2 > 0`` (or ``q2 == 0 < q1``) are solved; the mirror
    ``(-q1, -q2, -p)`` has the same solution set and is booked under its own
    case.  Sums run plainly within a pair and with Neumaier compensation
    across the pairs of one height.  Returns ``(cost[nq,4,ns], ntrip[nq,4],
    maxratio[nq,4], nviol[nq,4])``.
    """
    nq = qhi - qlo + 1
    ns = svals.shape[0]
    total = np.zeros((nq, 4, ns))
    comp = np.zeros((nq, 4, ns))
    ntrip = np.zeros((nq, 4), dtype=np.int64)
    maxratio = np.zeros((nq, 4))
    nviol = np.zeros((nq, 4), dtype=np.int64)
    for iq in prange(nq):
        q = qlo + iq
        ps = psi[q]
        loc = np.zeros((4, ns))
        for q1 in range(-q, q + 1):
            for j in range(_n_q2(q, q1)):
                q2 = _q2_at(q, q1, j)
                if q2 < 0 or (q2 == 0 and q1 < 0):
                    continue
                st = pair_setup(kind, prm, M, q1, q2)
                stm = pair_setup(kind, prm, M, -q1, -q2)
                pl, ph = p_range(kind, prm, q1, q2, st, ps)
                loc[:, :] = 0.0
                for p in range(pl, ph + 1):
                    L = eval_triple(kind, prm, q1, q2, st, p, ps)[5]
                    c = triple_case(st, p, ps)
                    cm = triple_case(stm, -p, ps)
                    ntrip[iq, c] += 1
                    ntrip[iq, cm] += 1
                    lg = math.log(L) if L > 0.0 else -np.inf
                    for si in range(ns):
                        v = math.exp(svals[si] * lg)
                        loc[c, si] += v
                        loc[cm, si] += v
                    if check:
                        for side in range(2):
                            if side == 0:
                                cc, pp, p0, nrm = c, p, st[6], st[7]
                                a1, a2 = q1, q2
                            else:
                                cc, pp, p0, nrm = cm, -p, stm[6], stm[7]
                                a1, a2 = -q1, -q2
                            bnd = triple_bound(cc, q, a1, a2, pp, p0, nrm, ps, q0, K)
                            if bnd == bnd:
                                r = L / bnd
                                if r > maxratio[iq, cc]:
                                    maxratio[iq, cc] = r
                                if r > 1.0 + rtol:
                                    nviol[iq, cc] += 1
                for c in range(4):
                    for si in range(ns):
                        if loc[c, si] != 0.0:
                            _kadd(total, comp, iq, c, si, loc[c, si])
    return total + comp, ntrip, maxratio, nviol
