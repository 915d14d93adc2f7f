"""Solution sets ``mu(q1, q2, p) = {x in I : |q1 x + q2 f(x) - p| < psi(q)}``.

Each set is at most two intervals because ``F(x) = q1 x + q2 f(x)`` is
monotone on either side of its critical point.  :func:`solve_mu` is the
reference solver (bracketed root finding on the curve's evaluators);
:func:`enumerate_arrays` uses the compiled kernels for built-in curves and
falls back to :func:`solve_mu` otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from . import _kernels as kern
from .curves import CurveConstants, ExtendedCurve
from .errors import BudgetExceeded, PreconditionError
from .psi import ApproxFunction
from .rootfind import monotone_root

THETA1 = "Theta1"
THETA2 = "Theta2"
P_NOT_P0 = "Theta2_pNotP0"
P0_SMALL = "Theta2_P0_smallNorm"
P0_LARGE = "Theta2_P0_largeNorm"
# index order matches the kernel case codes
CASES = (THETA1, P_NOT_P0, P0_SMALL, P0_LARGE)

DEFAULT_BUDGET = 50_000_000
_CHUNK = 5_000_000


@dataclass(frozen=True)
class IntervalSet:
    parts: tuple = ()
    total_length: float = 0.0

    @classmethod
    def from_parts(cls, parts, total_length=None):
        parts = tuple((float(lo), float(hi)) for lo, hi in parts)
        if total_length is None:
            total_length = sum(hi - lo for lo, hi in parts)
        return cls(parts, float(total_length))

    @property
    def empty(self):
        return not self.parts

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=bool)
        for lo, hi in self.parts:
            out |= (x >= lo) & (x <= hi)
        return out

    def __len__(self):
        return len(self.parts)


@dataclass(frozen=True)
class DualTriple:
    q1: int
    q2: int
    p: int
    q: int
    case: str
    p0: Optional[int] = None
    norm: Optional[float] = None  # ||F(x0)||, Theta2 only


def nearest_int_norm(x):
    """Distance to the nearest integer."""
    x = np.asarray(x, dtype=float)
    out = np.abs(x - np.round(x))
    return float(out) if out.ndim == 0 else out


def classify(q1, q2, constants: CurveConstants):
    """``Theta1`` when ``|q1| > 2M|q2|``, else ``Theta2`` (then ``q1/q2`` lies in J)."""
    if q1 == 0 and q2 == 0:
        raise PreconditionError("(q1, q2) = (0, 0) is excluded")
    return THETA1 if abs(q1) > 2.0 * constants.M * abs(q2) else THETA2


def p_zero(ext: ExtendedCurve, q1, q2):
    """The integer ``p0`` with ``-1/2 < F(x0) - p0 <= 1/2``."""
    return _p0_norm(ext, q1, q2)[0]


def _p0_norm(ext, q1, q2):
    if ext.base.kind == kern.PARABOLA and ext.kernel_params is not None:
        # F(x0) = -q1^2 / (4 q2) exactly
        return _parabola_p0_norm(q1, q2)
    fx0 = float(ext.F(q1, q2, ext.critical_point(q1, q2)))
    p0 = math.ceil(fx0 - 0.5)
    return p0, abs(fx0 - p0)


def _parabola_p0_norm(q1, q2):
    sig = 1 if q2 > 0 else -1
    D = 4 * abs(q2)
    N = -sig * q1 * q1
    p0 = -((-(2 * N - D)) // (2 * D))
    return p0, abs(N - p0 * D) / D


def make_triple(ext, psi: ApproxFunction, constants, q1, q2, p) -> DualTriple:
    q = max(abs(q1), abs(q2))
    if classify(q1, q2, constants) == THETA1:
        return DualTriple(q1, q2, p, q, THETA1)
    p0, norm = _p0_norm(ext, q1, q2)
    if p != p0:
        case = P_NOT_P0
    elif norm < 2.0 * psi(q):
        case = P0_SMALL
    else:
        case = P0_LARGE
    return DualTriple(q1, q2, p, q, case, p0, norm)


def _monotone_piece(ext, q1, q2, u, v, Fu, Fv, clo, chi):
    if Fu < Fv:
        Fmin, Fmax, xmin, xmax = Fu, Fv, u, v
    else:
        Fmin, Fmax, xmin, xmax = Fv, Fu, v, u
    lo_c, hi_c = max(clo, Fmin), min(chi, Fmax)
    if not lo_c < hi_c:
        return None

    def F(x):
        return q1 * x + q2 * float(ext.fext(x))

    def dF(x):
        return q1 + q2 * float(ext.f1ext(x))

    xl = xmin if lo_c == Fmin else monotone_root(F, dF, lo_c, u, v)
    xh = xmax if hi_c == Fmax else monotone_root(F, dF, hi_c, u, v)
    return (min(xl, xh), max(xl, xh))


def solve_mu(ext: ExtendedCurve, psi: ApproxFunction, q1, q2, p) -> IntervalSet:
    """The solution set of ``|F(x) - p| < psi(q)`` on ``I`` as closed intervals."""
    if q1 == 0 and q2 == 0:
        raise PreconditionError("(q1, q2) = (0, 0) is excluded")
    c = ext.base
    a, b = c.a, c.b
    q = max(abs(q1), abs(q2))
    ps = psi(q)
    clo, chi = p - ps, p + ps
    Fa, Fb = float(ext.F(q1, q2, a)), float(ext.F(q1, q2, b))
    x0 = None
    if q2 != 0 and abs(q1) <= 2.0 * c.M * abs(q2):
        x0 = float(ext.critical_point(q1, q2))
    if x0 is not None and a < x0 < b:
        Fx0 = float(ext.F(q1, q2, x0))
        left = _monotone_piece(ext, q1, q2, a, x0, Fa, Fx0, clo, chi)
        right = _monotone_piece(ext, q1, q2, x0, b, Fx0, Fb, clo, chi)
        if left and right and left[1] == x0 and right[0] == x0:
            return IntervalSet.from_parts([(left[0], right[1])])
        return IntervalSet.from_parts([pc for pc in (left, right) if pc])
    piece = _monotone_piece(ext, q1, q2, a, b, Fa, Fb, clo, chi)
    return IntervalSet.from_parts([piece] if piece else [])


def mu_measure(mu: IntervalSet) -> float:
    return mu.total_length


def bound_constants(c1, c2):
    """Explicit multipliers replacing the implied constants of the envelopes.

    From the sublevel-set lemma (``2 eta / delta1`` per monotone piece, at most
    two pieces, or ``4 sqrt(eta / delta2)``) and the band
    ``|F'|^2 >= (2 c1^2 / c2) |q2| |F - F(x0)|``.
    """
    return {
        THETA1: 4.0,
        P_NOT_P0: 4.0 * math.sqrt(3.0 * c2 / (2.0 * c1 * c1)),
        P0_SMALL: 4.0 / math.sqrt(c1),
        P0_LARGE: 4.0 * math.sqrt(c2) / c1,
    }


def _K_array(constants):
    K = bound_constants(constants.c1, constants.c2)
    return np.array([K[c] for c in CASES])


def theoretical_bound(triple: DualTriple, psi: ApproxFunction, constants: CurveConstants) -> float:
    """Case envelope for ``|mu(q1, q2, p)|`` with explicit constants."""
    K = bound_constants(constants.c1, constants.c2)
    ps = psi(triple.q)
    if triple.case == THETA1:
        if not abs(triple.q1) > 2.0 * constants.M * abs(triple.q2):
            raise PreconditionError("triple is not in Theta1")
        return K[THETA1] * ps / abs(triple.q1)
    if triple.q2 == 0 or triple.p0 is None:
        raise PreconditionError("Theta2 envelope needs q2 != 0 and p0")
    if triple.case == P_NOT_P0:
        if triple.p == triple.p0:
            raise PreconditionError("p equals p0")
        if constants.q0 is None or triple.q < constants.q0:
            raise PreconditionError(f"p != p0 envelope needs q >= q0 (q={triple.q}, q0={constants.q0})")
        return K[P_NOT_P0] * ps / math.sqrt(abs(triple.q2) * abs(triple.p - triple.p0))
    if triple.case == P0_SMALL:
        if not triple.norm < 2.0 * ps:
            raise PreconditionError("triple is not small-norm")
        return K[P0_SMALL] * math.sqrt(ps / abs(triple.q2))
    if triple.case == P0_LARGE:
        if triple.norm < 2.0 * ps:
            raise PreconditionError("triple is not large-norm")
        return K[P0_LARGE] * ps / math.sqrt(abs(triple.q2) * triple.norm)
    raise PreconditionError(f"unknown case {triple.case!r}")


# ----------------------------------------------------------------------------
# enumeration
# ----------------------------------------------------------------------------


@dataclass
class TripleBatch:
    """Column arrays for a run of nonempty triples in enumeration order."""

    q1: np.ndarray
    q2: np.ndarray
    p: np.ndarray
    q: np.ndarray
    case: np.ndarray  # index into CASES
    nparts: np.ndarray
    p0: np.ndarray
    parts: np.ndarray  # (n, 4): l0, r0, l1, r1
    length: np.ndarray

    def __len__(self):
        return int(self.q1.size)

    def intervals(self):
        """All parts as an ``(m, 2)`` array, in triple order."""
        first = self.parts[:, 0:2]
        second = self.parts[self.nparts == 2, 2:4]
        order = np.concatenate([np.flatnonzero(self.nparts >= 1) * 2, np.flatnonzero(self.nparts == 2) * 2 + 1])
        both = np.concatenate([first[self.nparts >= 1], second])
        return both[np.argsort(order, kind="stable")]

    def interval_set(self, i):
        n = int(self.nparts[i])
        pr = self.parts[i]
        return IntervalSet.from_parts([(pr[0], pr[1]), (pr[2], pr[3])][:n], self.length[i])

    def triple(self, i):
        case = CASES[int(self.case[i])]
        p0 = None if case == THETA1 else int(self.p0[i])
        return DualTriple(int(self.q1[i]), int(self.q2[i]), int(self.p[i]), int(self.q[i]), case, p0)


def _pairs(q):
    for q1 in range(-q, q + 1):
        for q2 in (range(-q, q + 1) if abs(q1) == q else (-q, q)):
            yield q1, q2


def count_nonempty(ext, psi, Qlo, Qhi):
    """Number of nonempty triples per height (kernel curves only)."""
    kind, prm = ext.kernel_params
    return kern.count_triples(kind, prm, ext.base.M, psi.array(Qhi), Qlo, Qhi)


def _check_range(Qlo, Qhi):
    if not 1 <= Qlo <= Qhi:
        raise PreconditionError(f"need 1 <= Qlo <= Qhi, got {Qlo}, {Qhi}")


def estimate_items(ext, psi, Qlo, Qhi):
    """Exact triple count for kernel curves, a p-range envelope otherwise."""
    _check_range(Qlo, Qhi)
    if ext.kernel_params is not None:
        return int(count_nonempty(ext, psi, Qlo, Qhi).sum())
    C = ext.base.C
    q = np.arange(Qlo, Qhi + 1, dtype=float)
    return int(np.sum(8 * q * (2 * C * q + 1)))


def _python_batch(ext, psi, Qlo, Qhi):
    constants = ext.base.constants(psi)
    c = ext.base
    rows = []
    for q in range(Qlo, Qhi + 1):
        ps = psi(q)
        for q1, q2 in _pairs(q):
            vals = [float(ext.F(q1, q2, c.a)), float(ext.F(q1, q2, c.b))]
            if q2 != 0 and abs(q1) <= 2.0 * c.M * abs(q2):
                x0 = float(ext.critical_point(q1, q2))
                if c.a < x0 < c.b:
                    vals.append(float(ext.F(q1, q2, x0)))
            for p in range(math.floor(min(vals) - ps), math.ceil(max(vals) + ps) + 1):
                mu = solve_mu(ext, psi, q1, q2, p)
                if mu.empty:
                    continue
                t = make_triple(ext, psi, constants, q1, q2, p)
                rows.append((t, mu))
    n = len(rows)
    parts = np.zeros((n, 4))
    for i, (_, mu) in enumerate(rows):
        for j, (lo, hi) in enumerate(mu.parts):
            parts[i, 2 * j], parts[i, 2 * j + 1] = lo, hi
    col = lambda f: np.array([f(t) for t, _ in rows], dtype=np.int64)
    return TripleBatch(
        q1=col(lambda t: t.q1), q2=col(lambda t: t.q2), p=col(lambda t: t.p), q=col(lambda t: t.q),
        case=col(lambda t: CASES.index(t.case)),
        nparts=np.array([len(mu) for _, mu in rows], dtype=np.int64),
        p0=col(lambda t: t.p0 if t.p0 is not None else 0),
        parts=parts, length=np.array([mu.total_length for _, mu in rows]),
    )


def _kernel_batch(ext, psi, Qlo, Qhi, counts):
    kind, prm = ext.kernel_params
    n = int(counts.sum())
    offsets = np.zeros(counts.size, dtype=np.int64)
    offsets[1:] = np.cumsum(counts)[:-1]
    ints = np.empty((n, 7), dtype=np.int64)
    parts = np.empty((n, 4))
    length = np.empty(n)
    kern.fill_triples(kind, prm, ext.base.M, psi.array(Qhi), Qlo, Qhi, offsets, ints, parts, length)
    return TripleBatch(ints[:, 0], ints[:, 1], ints[:, 2], ints[:, 3], ints[:, 4], ints[:, 5], ints[:, 6], parts, length)


def iter_batches(ext, psi, Qlo, Qhi, budget=DEFAULT_BUDGET, chunk=_CHUNK, partial=False) -> Iterator[TripleBatch]:
    """Nonempty triples with heights in ``[Qlo, Qhi]``, in batches of whole heights.

    Raises :class:`BudgetExceeded` before any work when the item estimate is
    over ``budget``.  With ``partial=True`` the heights that fit are yielded
    first and the error is raised afterwards.
    """
    _check_range(Qlo, Qhi)
    if ext.kernel_params is None:
        est = estimate_items(ext, psi, Qlo, Qhi)
        if budget is not None and est > budget:
            if partial:
                Qfit = _python_fit(ext, psi, Qlo, Qhi, budget)
                if Qfit >= Qlo:
                    yield _python_batch(ext, psi, Qlo, Qfit)
            raise BudgetExceeded(est, budget, "triples")
        yield _python_batch(ext, psi, Qlo, Qhi)
        return
    counts = count_nonempty(ext, psi, Qlo, Qhi)
    total = int(counts.sum())
    over = None
    if budget is not None and total > budget:
        if not partial:
            raise BudgetExceeded(total, budget, "triples")
        over = BudgetExceeded(total, budget, "triples")
        counts = counts[: int(np.searchsorted(np.cumsum(counts), budget, side="right"))]
    start = 0
    while start < counts.size:
        stop = start + 1
        acc = int(counts[start])
        while stop < counts.size and acc + counts[stop] <= chunk:
            acc += int(counts[stop])
            stop += 1
        yield _kernel_batch(ext, psi, Qlo + start, Qlo + stop - 1, counts[start:stop])
        start = stop
    if over is not None:
        raise over


def _python_fit(ext, psi, Qlo, Qhi, budget):
    Q = Qlo - 1
    while Q < Qhi and estimate_items(ext, psi, Qlo, Q + 1) <= budget:
        Q += 1
    return Q


def enumerate_arrays(ext, psi, Qlo, Qhi, budget=DEFAULT_BUDGET) -> TripleBatch:
    batches = list(iter_batches(ext, psi, Qlo, Qhi, budget))
    if len(batches) == 1:
        return batches[0]
    return TripleBatch(*[np.concatenate([getattr(b, f) for b in batches]) for f in TripleBatch.__dataclass_fields__])


def enumerate_nonempty(ext, psi, Qlo, Qhi, budget=DEFAULT_BUDGET):
    """Yield ``(DualTriple, IntervalSet)`` for every nonempty solution set.

    Order: height ascending, then ``q1``, ``q2``, ``p``.  Kernel triples carry
    ``p0`` but not the norm of ``F(x0)``; use :func:`make_triple` for that.
    """
    for batch in iter_batches(ext, psi, Qlo, Qhi, budget):
        for i in range(len(batch)):
            yield batch.triple(i), batch.interval_set(i)
