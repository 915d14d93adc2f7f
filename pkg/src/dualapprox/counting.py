"""Rational points ``t/r`` near a convex curve, counted shell by shell.

For ``R <= r < 2R`` and integers ``t`` with ``t/r`` in a closed interval,
``count_near`` counts pairs with ``||r phi(t/r)|| < delta`` and
``weighted_sum`` adds ``||r phi(t/r)||^(-lam)`` over pairs with norm at least
``delta``.  Polynomials with rational coefficients are evaluated exactly;
anything else goes through long double arithmetic with a guard band.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

import numpy as np
from numba import njit, prange

from . import _jit  # noqa: F401
from .errors import BudgetExceeded, PreconditionError

GUARD = 1e-9
DEFAULT_BUDGET = 50_000_000
COUNT_HEADER = ("j", "k", "R", "delta", "count", "weighted", "boundary_flags")
_INT_LIMIT = 2**31  # moduli below this keep products inside int64


@dataclass(frozen=True)
class RationalPoly:
    """``sum(coeffs[i] * u**i)`` with exact rational coefficients."""

    coeffs: tuple

    def __init__(self, coeffs):
        cs = [Fraction(c) for c in coeffs]
        while len(cs) > 1 and cs[-1] == 0:
            cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs) or (Fraction(0),))

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def exact(self, u):
        u = Fraction(u)
        return sum(c * u**i for i, c in enumerate(self.coeffs))

    def __call__(self, u):
        u = np.asarray(u)
        out = np.zeros_like(u, dtype=np.result_type(u, float))
        for c in reversed(self.coeffs):
            out = out * u + float(c)
        return out

    def integer_form(self):
        """``(A, L, d)`` with ``r phi(t/r) = sum(A[i] t^i r^(d-i)) / (L r^(d-1))``."""
        L = math.lcm(*(c.denominator for c in self.coeffs))
        d = max(self.degree, 1)
        A = [int(c * L) for c in self.coeffs] + [0] * (d + 1 - len(self.coeffs))
        return A, L, d


Phi = Union[RationalPoly, Callable]


@dataclass(frozen=True)
class CountQuery:
    phi: Phi
    gamma: tuple
    R: int
    delta: float
    lam: Optional[float] = None

    def __post_init__(self):
        lo, hi = self.gamma
        if not lo <= hi:
            raise PreconditionError(f"empty interval {self.gamma}")
        if int(self.R) != self.R or self.R < 1:
            raise PreconditionError(f"R must be a positive integer, got {self.R}")
        if not 0.0 < self.delta < 1.0:
            raise PreconditionError(f"delta must lie in (0, 1), got {self.delta}")
        if self.lam is not None and not 0.0 < self.lam < 1.0:
            raise PreconditionError(f"lambda must lie in (0, 1), got {self.lam}")


@dataclass(frozen=True)
class CountRecord:
    R: int
    delta: float
    count: int
    weighted: Optional[float] = None
    boundary_flags: int = 0
    j: Optional[int] = None
    k: Optional[int] = None


def t_bounds(r, gamma):
    """Integers ``t`` with ``t/r`` in the closed interval ``gamma``."""
    lo, hi = Fraction(gamma[0]), Fraction(gamma[1])
    return math.ceil(r * lo), math.floor(r * hi)


def pair_estimate(R, gamma, r_hi=None):
    r_hi = 2 * R if r_hi is None else r_hi
    width = float(gamma[1]) - float(gamma[0])
    return int(sum(max(0, math.floor(r * width) + 1) for r in range(R, r_hi)))


@njit(cache=True)
def _mulmod(a, b, m):
    return (a * b) % m


@njit(parallel=True, cache=True)
def _exact_shell(A, d, r_lo, Dv, tlo, thi, U, lam, want_w):
    """Per-r tallies for ``min(m, D - m) < U`` and weights over the complement."""
    nr = Dv.shape[0]
    nk = U.shape[1]
    counts = np.zeros((nr, nk), dtype=np.int64)
    wsum = np.zeros((nr, nk))
    for i in prange(nr):
        r = r_lo + i
        D = Dv[i]
        rp = np.empty(d + 1, dtype=np.int64)
        rp[0] = 1
        for e in range(1, d + 1):
            rp[e] = _mulmod(rp[e - 1], r % D, D)
        coef = np.empty(d + 1, dtype=np.int64)
        for e in range(d + 1):
            coef[e] = _mulmod(A[e] % D, rp[d - e], D)
        for t in range(tlo[i], thi[i] + 1):
            tm = t % D
            # Horner in t modulo D
            m = 0
            for e in range(d, -1, -1):
                m = (_mulmod(m, tm, D) + coef[e]) % D
            nm = min(m, D - m)
            for c in range(nk):
                if nm < U[i, c]:
                    counts[i, c] += 1
                elif want_w:
                    wsum[i, c] += (nm / D) ** (-lam)
    return counts, wsum


def _exact_shell_py(A, d, r_lo, Dv, tlo, thi, U, lam, want_w):
    nr, nk = U.shape
    counts = np.zeros((nr, nk), dtype=np.int64)
    wsum = np.zeros((nr, nk))
    for i in range(nr):
        r, D = r_lo + i, int(Dv[i])
        for t in range(int(tlo[i]), int(thi[i]) + 1):
            m = sum(a * t**e * r ** (d - e) for e, a in enumerate(A)) % D
            nm = min(m, D - m)
            for c in range(nk):
                if nm < U[i, c]:
                    counts[i, c] += 1
                elif want_w:
                    wsum[i, c] += (nm / D) ** (-lam)
    return counts, wsum


def _exact_stats(phi: RationalPoly, gamma, r_lo, r_hi, deltas, lam):
    A, L, d = phi.integer_form()
    rs = range(r_lo, r_hi)
    Dv = [L * r ** (d - 1) for r in rs]
    bounds = [t_bounds(r, gamma) for r in rs]
    fd = [Fraction(x) for x in deltas]
    U = [[math.ceil(x * D) for x in fd] for D in Dv]
    want_w = lam is not None
    lam_f = float(lam) if want_w else 0.0
    small = max(Dv, default=1) < _INT_LIMIT and max((abs(a) for a in A), default=0) < 2**62
    if small:
        counts, wsum = _exact_shell(
            np.array(A, dtype=np.int64), d, r_lo, np.array(Dv, dtype=np.int64),
            np.array([b[0] for b in bounds], dtype=np.int64), np.array([b[1] for b in bounds], dtype=np.int64),
            np.array(U, dtype=np.int64).reshape(len(Dv), len(fd)), lam_f, want_w,
        )
    else:
        counts, wsum = _exact_shell_py(A, d, r_lo, Dv, [b[0] for b in bounds], [b[1] for b in bounds],
                                       np.array(U, dtype=object).reshape(len(Dv), len(fd)), lam_f, want_w)
    return counts.sum(axis=0), _merge_rows(wsum), np.zeros(len(fd), dtype=np.int64)


def _merge_rows(wsum):
    return np.array([math.fsum(wsum[:, c]) for c in range(wsum.shape[1])])


def _float_stats(phi, gamma, r_lo, r_hi, deltas, lam, chunk=2_000_000):
    deltas = np.asarray(deltas, dtype=float)
    nk = deltas.size
    counts = np.zeros(nk, dtype=np.int64)
    flags = np.zeros(nk, dtype=np.int64)
    per_r = []
    r = r_lo
    while r < r_hi:
        rows, acc = [], 0
        while r < r_hi and (acc == 0 or acc < chunk):
            lo, hi = t_bounds(r, gamma)
            if hi >= lo:
                rows.append((r, lo, hi))
                acc += hi - lo + 1
            else:
                per_r.append(np.zeros(nk))
            r += 1
        if not rows:
            continue
        sizes = np.array([h - l + 1 for _, l, h in rows])
        rr = np.repeat(np.array([x for x, _, _ in rows], dtype=np.longdouble), sizes)
        tt = np.concatenate([np.arange(l, h + 1) for _, l, h in rows]).astype(np.longdouble)
        v = rr * np.asarray(phi(tt / rr))
        nrm = np.abs(v - np.rint(v)).astype(float)
        edges = np.concatenate([[0], np.cumsum(sizes)[:-1]])
        w = np.zeros((len(rows), nk))
        for c, dl in enumerate(deltas):
            amb = np.abs(nrm - dl) <= GUARD
            flags[c] += int(amb.sum())
            inside = (nrm < dl) & ~amb
            counts[c] += int(inside.sum())
            if lam is not None:
                keep = ~inside & ~amb
                vals = np.where(keep, np.where(keep, nrm, 1.0) ** (-lam), 0.0)
                w[:, c] = [math.fsum(vals[e:e + n]) for e, n in zip(edges, sizes)]
        per_r.extend(w)
    wsum = np.array(per_r).reshape(-1, nk) if per_r else np.zeros((0, nk))
    return counts, _merge_rows(wsum), flags


def shell_stats(phi: Phi, gamma, r_lo, r_hi, deltas, lam=None, budget=DEFAULT_BUDGET):
    """Counts, weighted sums and guard flags for ``r_lo <= r < r_hi`` at several thresholds.

    No range check on the thresholds; the public operations add those.
    """
    if budget is not None:
        est = pair_estimate(r_lo, gamma, r_hi)
        if est > budget:
            raise BudgetExceeded(est, budget, "pairs")
    if r_hi <= r_lo:
        nk = len(deltas)
        return np.zeros(nk, dtype=np.int64), np.zeros(nk), np.zeros(nk, dtype=np.int64)
    if isinstance(phi, RationalPoly):
        return _exact_stats(phi, gamma, r_lo, r_hi, deltas, lam)
    return _float_stats(phi, gamma, r_lo, r_hi, deltas, lam)


def count_near(query: CountQuery, budget=DEFAULT_BUDGET) -> CountRecord:
    """Pairs with ``R <= r < 2R``, ``t/r`` in ``gamma`` and ``||r phi(t/r)|| < delta``.

    ``delta = 1/4`` is accepted as the closed end of the range.
    """
    if query.delta > 0.25:
        raise PreconditionError(f"delta must lie in (0, 1/4], got {query.delta}")
    c, _, fl = shell_stats(query.phi, query.gamma, query.R, 2 * query.R, [query.delta], None, budget)
    return CountRecord(query.R, query.delta, int(c[0]), None, int(fl[0]))


def weighted_sum(query: CountQuery, budget=DEFAULT_BUDGET) -> CountRecord:
    """Sum of ``||r phi(t/r)||^(-lam)`` over pairs with norm at least ``delta``."""
    if query.lam is None:
        raise PreconditionError("weighted_sum needs lam")
    c, w, fl = shell_stats(query.phi, query.gamma, query.R, 2 * query.R, [query.delta], query.lam, budget)
    return CountRecord(query.R, query.delta, int(c[0]), float(w[0]), int(fl[0]))


def dyadic_scan(phi: Phi, gamma, jvals: Sequence[int], kvals: Sequence[int], lam=None,
                budget=DEFAULT_BUDGET) -> list:
    """One record per ``(j, k)`` with ``R = 2^j`` and ``delta = 2^-k``, sorted by ``j`` then ``k``."""
    js, ks = sorted(set(jvals)), sorted(set(kvals))
    if not js or not ks:
        return []
    if any(j < 0 for j in js):
        raise PreconditionError("shell exponents must be nonnegative")
    if any(k < 1 for k in ks):
        raise PreconditionError("delta exponents must be at least 1")
    est = sum(pair_estimate(2**j, gamma) for j in js)
    if budget is not None and est > budget:
        raise BudgetExceeded(est, budget, "pairs")
    deltas = [2.0**-k for k in ks]
    out = []
    for j in js:
        R = 2**j
        c, w, fl = shell_stats(phi, gamma, R, 2 * R, deltas, lam, None)
        for i, k in enumerate(ks):
            out.append(CountRecord(R, deltas[i], int(c[i]), None if lam is None else float(w[i]), int(fl[i]), j, k))
    return out


def _slope(x, y):
    x, y = np.asarray(x, float), np.asarray(y, float)
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(coef[0]), y - A @ coef


def fit_exponents(table, k=None, j=None):
    """Least-squares slopes of ``log2(count)`` against ``j`` and against ``-k``.

    ``slope_R`` uses the rows at fixed ``k`` (default: the ``k`` with most rows),
    ``slope_delta`` the rows at fixed ``j``.  Returns
    ``(slope_R, slope_delta, residual_rms)``.
    """
    rows = [r for r in table if r.j is not None and r.k is not None]

    def pick(attr, given):
        if given is not None:
            return given
        vals = [getattr(r, attr) for r in rows]
        return max(sorted(set(vals)), key=vals.count)

    k = pick("k", k)
    j = pick("j", j)
    along_j = sorted((r.j, r.count) for r in rows if r.k == k)
    along_k = sorted((r.k, r.count) for r in rows if r.j == j)
    for name, series in (("j", along_j), ("k", along_k)):
        if len(series) < 3:
            raise PreconditionError(f"need at least 3 rows varying in {name}")
        if len({x for x, _ in series}) < 2:
            raise PreconditionError(f"degenerate {name} values")
        if any(c <= 0 for _, c in series):
            raise PreconditionError("counts must be positive")
    sR, resR = _slope([x for x, _ in along_j], [math.log2(c) for _, c in along_j])
    sD, resD = _slope([-x for x, _ in along_k], [math.log2(c) for _, c in along_k])
    res = np.concatenate([resR, resD])
    return sR, sD, float(np.sqrt(np.mean(res**2)))


def write_count_csv(records, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COUNT_HEADER)
        for r in records:
            w.writerow([
                "" if r.j is None else r.j, "" if r.k is None else r.k, r.R, repr(float(r.delta)), r.count,
                "" if r.weighted is None else repr(float(r.weighted)), r.boundary_flags,
            ])
