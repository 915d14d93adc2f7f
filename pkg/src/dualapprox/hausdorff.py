"""Explicit covers of the approximable set and their Hausdorff ``s``-costs.

The tail union of solution sets with heights in ``[Q0, Q1]`` covers every
point approximable by some triple of that height.  Its cost after merging
overlaps and cutting pieces down to diameter ``rho`` is an upper bound for
``H^s_rho`` of the covered set; watching how that bound moves from one
dyadic block to the next gives a finite-scale proxy for the dimension.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numba import njit

from . import _jit  # noqa: F401
from .approx import DEFAULT_BUDGET, IntervalSet, iter_batches
from .curves import ExtendedCurve
from .errors import PreconditionError
from .ledger import critical_exponent
from .psi import ApproxFunction

DECAY_FACTOR = 0.95
COVER_HEADER = ("s", "k", "Q0", "Q1", "rho", "cost", "interval_count", "classification")
SHRINKING, GROWING = "shrinking", "growing"


@dataclass(frozen=True)
class CoverEstimate:
    s: float
    rho: float
    cost: float
    interval_count: int
    Qrange: Optional[tuple] = None


def _as_array(cover):
    if isinstance(cover, np.ndarray):
        arr = cover.reshape(-1, 2).astype(float, copy=False)
    else:
        rows = []
        for item in cover:
            if isinstance(item, IntervalSet):
                rows.extend(item.parts)
            else:
                rows.append(tuple(item))
        arr = np.array(rows, dtype=float).reshape(-1, 2)
    if arr.size and np.any(arr[:, 1] < arr[:, 0]):
        raise PreconditionError("interval with hi < lo")
    return arr


def _sort_unique(arr):
    if arr.shape[0] == 0:
        return arr
    order = np.lexsort((arr[:, 1], arr[:, 0]))
    arr = arr[order]
    keep = np.ones(arr.shape[0], dtype=bool)
    keep[1:] = np.any(arr[1:] != arr[:-1], axis=1)
    return arr[keep]


def build_tail_cover(ext: ExtendedCurve, psi: ApproxFunction, Q0, Q1, budget=DEFAULT_BUDGET) -> np.ndarray:
    """All nonempty solution-set parts for heights in ``[Q0, Q1]`` as an ``(m, 2)`` array.

    Rows are sorted by ``(lo, hi)`` and exact duplicates dropped.
    """
    if not 1 <= Q0 <= Q1:
        raise PreconditionError(f"need 1 <= Q0 <= Q1, got {Q0}, {Q1}")
    chunks = [b.intervals() for b in iter_batches(ext, psi, Q0, Q1, budget)]
    arr = np.concatenate(chunks) if chunks else np.zeros((0, 2))
    return _sort_unique(arr)


@njit(cache=True)
def _merge_sorted(lo, hi):
    n = lo.shape[0]
    out_lo = np.empty(n)
    out_hi = np.empty(n)
    m = 0
    for i in range(n):
        if m > 0 and lo[i] <= out_hi[m - 1]:
            if hi[i] > out_hi[m - 1]:
                out_hi[m - 1] = hi[i]
        else:
            out_lo[m] = lo[i]
            out_hi[m] = hi[i]
            m += 1
    return out_lo[:m], out_hi[:m]


@njit(cache=True)
def _split_cost(lengths, s, rho):
    """Neumaier sum of ``m (L/m)^s`` with ``m = ceil(L/rho)``, plus the piece count."""
    total = 0.0
    comp = 0.0
    pieces = 0
    for L in lengths:
        m = max(1.0, math.ceil(L / rho))
        v = m * (L / m) ** s if L > 0.0 else 0.0
        t = total + v
        if abs(total) >= abs(v):
            comp += (total - t) + v
        else:
            comp += (v - t) + total
        total = t
        pieces += int(m)
    return total + comp, pieces


def _block_lengths(ext, psi, Q0, Q1, budget):
    """Merged lengths of the tail cover without materialising the row array twice."""
    los, his = [], []
    for b in iter_batches(ext, psi, Q0, Q1, budget, chunk=2_000_000):
        iv = b.intervals()
        los.append(iv[:, 0].copy())
        his.append(iv[:, 1].copy())
        del b, iv
    if not los:
        return np.zeros(0)
    lo, hi = np.concatenate(los), np.concatenate(his)
    del los, his
    order = np.lexsort((hi, lo))
    lo, hi = lo[order], hi[order]
    del order
    mlo, mhi = _merge_sorted(lo, hi)
    return mhi - mlo


def merged_lengths(cover):
    arr = _sort_unique(_as_array(cover))
    if arr.shape[0] == 0:
        return np.zeros(0)
    lo, hi = _merge_sorted(np.ascontiguousarray(arr[:, 0]), np.ascontiguousarray(arr[:, 1]))
    return hi - lo


def _cost_from_lengths(lengths, s, rho, Qrange=None):
    if lengths.size == 0:
        return CoverEstimate(s, rho, 0.0, 0, Qrange)
    cost, pieces = _split_cost(lengths, float(s), float(rho))
    return CoverEstimate(float(s), float(rho), float(cost), int(pieces), Qrange)


def hs_cost(cover, s, rho, Qrange=None) -> CoverEstimate:
    """Upper bound for ``H^s_rho`` of the union of ``cover``.

    Overlapping intervals are merged, then each interval longer than ``rho``
    is cut into ``ceil(len/rho)`` equal pieces.
    """
    if not 0.0 < s <= 1.0:
        raise PreconditionError(f"s must lie in (0, 1], got {s}")
    if not rho > 0:
        raise PreconditionError(f"rho must be positive, got {rho}")
    return _cost_from_lengths(merged_lengths(cover), s, rho, Qrange)


def refine_cover(cover, rho) -> np.ndarray:
    """The merged cover with every interval cut into pieces of diameter at most ``rho``."""
    arr = _sort_unique(_as_array(cover))
    if arr.shape[0] == 0:
        return arr
    lo, hi = _merge_sorted(np.ascontiguousarray(arr[:, 0]), np.ascontiguousarray(arr[:, 1]))
    out = []
    for a, b in zip(lo, hi):
        m = max(1, math.ceil((b - a) / rho))
        edges = np.linspace(a, b, m + 1)
        out.append(np.column_stack([edges[:-1], edges[1:]]))
    return np.concatenate(out)


def typical_width(psi, k):
    """``2 psi(2^k) / 2^k``, the width of a generic solution set in block ``k``."""
    return 2.0 * psi(2**k) / 2**k


def classify_costs(ks, costs, factor=DECAY_FACTOR):
    """``(classification, per_block_factor)`` from the least-squares slope of ``log2(cost)``."""
    ks = np.asarray(ks, dtype=float)
    c = np.asarray(costs, dtype=float)
    if ks.size < 2:
        raise PreconditionError("need at least two blocks to classify")
    if np.any(c <= 0):
        return GROWING, math.nan
    slope = np.polyfit(ks, np.log2(c), 1)[0]
    f = 2.0**slope
    return (SHRINKING if f <= factor else GROWING), float(f)


@dataclass
class ScanResult:
    nu: float
    rows: list  # (s, k, Q0, Q1, rho, cost, interval_count, classification)
    factors: dict  # s -> fitted per-block cost factor
    classes: dict  # s -> classification
    s_hat: Optional[float]
    bracket: tuple  # (largest growing s, smallest shrinking s)
    note: str = ""
    expected: float = field(default=math.nan)


def dimension_scan(ext: ExtendedCurve, nu, s_grid: Sequence[float], k_grid: Sequence[int],
                   rho=None, factor=DECAY_FACTOR, budget=DEFAULT_BUDGET) -> ScanResult:
    """Costs of dyadic tail covers for ``psi = q^-nu`` over an ``s`` by ``k`` grid.

    Block ``k`` uses heights ``2^k .. 2^(k+1) - 1``.  ``rho`` defaults to
    :func:`typical_width` per block.  An ``s`` is ``shrinking`` when the
    fitted per-block factor is at most ``factor``; ``s_hat`` is the midpoint
    between the largest growing and the smallest shrinking ``s``.
    """
    expected = critical_exponent(nu)
    s_grid = sorted(float(s) for s in s_grid)
    k_grid = sorted(int(k) for k in k_grid)
    if not s_grid or not k_grid:
        raise PreconditionError("grids must be nonempty")
    if any(not 0.0 < s <= 1.0 for s in s_grid):
        raise PreconditionError("s values must lie in (0, 1]")
    psi = ApproxFunction.power(nu)
    cells = {}
    for k in k_grid:
        Q0, Q1 = 2**k, 2 ** (k + 1) - 1
        lengths = _block_lengths(ext, psi, Q0, Q1, budget)
        r = typical_width(psi, k) if rho is None else float(rho)
        for s in s_grid:
            cells[s, k] = (Q0, Q1, _cost_from_lengths(lengths, s, r, (Q0, Q1)))
    classes, factors = {}, {}
    for s in s_grid:
        if len(k_grid) >= 2:
            classes[s], factors[s] = classify_costs(k_grid, [cells[s, k][2].cost for k in k_grid], factor)
        else:
            classes[s], factors[s] = "", math.nan
    rows = [
        (s, k, cells[s, k][0], cells[s, k][1], cells[s, k][2].rho, cells[s, k][2].cost,
         cells[s, k][2].interval_count, classes[s])
        for s in s_grid for k in k_grid
    ]
    grow = [s for s in s_grid if classes[s] == GROWING]
    shrink = [s for s in s_grid if classes[s] == SHRINKING]
    note, s_hat = "", None
    bracket = (max(grow) if grow else None, min(shrink) if shrink else None)
    if not grow or not shrink:
        note = "unbracketed: grid too coarse or too narrow to see a transition"
    else:
        s_hat = 0.5 * (bracket[0] + bracket[1])
        if bracket[0] > bracket[1]:
            note = "non-monotone classification"
    return ScanResult(float(nu), rows, factors, classes, s_hat, bracket, note, expected)


def write_cover_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COVER_HEADER)
        for s, k, Q0, Q1, rho, cost, n, cls in rows:
            w.writerow(["" if s is None else repr(float(s)), "" if k is None else k, Q0, Q1,
                        repr(float(rho)), repr(float(cost)), n, cls])
