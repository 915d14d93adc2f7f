"""Convergence series and dyadic-block accounting of the cover sum ``sum |mu|^s``.

Every nonempty solution set is booked into one of four cases (``Theta1``,
``p != p0``, ``p = p0`` with small norm, ``p = p0`` with large norm).  Each
block ``2^k <= q < 2^(k+1)`` also carries an explicit upper bound per case,
built from the per-set envelopes in :mod:`dualapprox.approx` and from exact
counts of rational points near the dual curve.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _kernels as kern
from .approx import CASES, DEFAULT_BUDGET, _K_array, bound_constants, count_nonempty, enumerate_nonempty, make_triple
from .counting import RationalPoly, shell_stats
from .curves import CurveConstants, ExtendedCurve
from .errors import BudgetExceeded, PreconditionError
from .psi import ApproxFunction

BUCKETS = ("theta1", "pNotP0", "P0_small", "P0_large")
_NO_Q0 = 2**62


def series_partial(psi: ApproxFunction, s, Q):
    """``sum_{q=1}^{Q} psi(q)^s q^(2-s)``, terms taken in ascending ``q``."""
    if not 0.0 < s <= 1.0:
        raise PreconditionError(f"s must lie in (0, 1], got {s}")
    if Q < 1:
        raise PreconditionError("Q must be positive")
    q = np.arange(1, int(Q) + 1, dtype=float)
    return math.fsum(np.asarray(psi(q)) ** s * q ** (2.0 - s))


def psi_hat(psi: ApproxFunction, s, eps0=0.1) -> ApproxFunction:
    """``max(psi(q), q^(1 - (3 + eps0)/s))``."""
    return psi.truncate(s, eps0)


def critical_exponent(nu):
    """Dimension threshold ``3/(nu + 1)`` for ``psi(q) = q^-nu`` on a planar curve."""
    if not nu > 2:
        raise PreconditionError(f"need nu > 2, got {nu}")
    return 3.0 / (nu + 1.0)


@dataclass
class BlockRecord:
    k: int
    q_range: tuple
    costs: dict
    bounds: dict
    triples_seen: int
    triples_by_case: dict = field(default_factory=dict)
    envelope: Optional[float] = None  # psi(2^k)^s 2^(k(3-s))
    max_ratio: dict = field(default_factory=dict)  # largest |mu| / per-set bound
    violations: dict = field(default_factory=dict)
    bound_asserted: bool = True

    @property
    def total(self):
        return math.fsum(self.costs.values())


@dataclass
class BlockLedger:
    s: float
    constants: CurveConstants
    K: dict
    blocks: list

    def to_dict(self):
        c = self.constants
        return {
            "s": self.s,
            "constants": {"M": c.M, "C": c.C, "c1": c.c1, "c2": c.c2, "q0": c.q0, "K": self.K},
            "blocks": [
                {
                    "k": b.k,
                    "q_range": list(b.q_range),
                    "costs": b.costs,
                    "bounds": b.bounds,
                    "triples_seen": b.triples_seen,
                    "triples_by_case": b.triples_by_case,
                    "envelope": b.envelope,
                    "empirical_K": {n: (b.costs[n] / b.envelope if b.envelope else None) for n in BUCKETS},
                    "max_ratio": b.max_ratio,
                    "violations": b.violations,
                    "bound_asserted": b.bound_asserted,
                }
                for b in self.blocks
            ],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)

    def bound_failures(self):
        """``(k, bucket)`` pairs where an asserted block bound is beaten."""
        out = []
        for b in self.blocks:
            if b.bound_asserted:
                out.extend((b.k, n) for n in BUCKETS if b.costs[n] > b.bounds[n])
        return out


def dual_phi(ext: ExtendedCurve):
    """``f*`` as an exact polynomial when known, else as a float evaluator."""
    if ext.base.dual_coeffs is not None:
        return RationalPoly(ext.base.dual_coeffs)
    return ext.dual


def _power_cumsum(n, e):
    """``out[m] = sum_{i=1}^{m} i^-e``."""
    out = np.zeros(n + 1)
    if n:
        out[1:] = np.cumsum(np.arange(1, n + 1, dtype=float) ** -e)
    return out


def _series_bounds(constants, K, psi, s, k):
    """Theta1 and ``p != p0`` block bounds by direct summation over the block."""
    M, C = constants.M, constants.C
    q = np.arange(2**k, 2 ** (k + 1), dtype=float)
    ps = np.asarray(psi(q))
    th1 = math.fsum(2.0 * (K["Theta1"] * ps / q) ** s * (2 * C * q + 1) * (2 * q / (2 * M) + 1))
    qi = q.astype(np.int64)
    mlo = np.ceil(q / (2 * M)).astype(np.int64)
    cm = _power_cumsum(int(qi[-1]), s / 2)
    S2 = 2 * (2 * q + 1) * q ** (-s / 2) + 4 * (cm[qi - 1] - cm[np.maximum(mlo, 1) - 1])
    n = 2 * np.floor(C * q).astype(np.int64) + 1
    half = (n + 1) // 2
    cj = _power_cumsum(int(half.max()), s / 2)
    P = 2 * cj[half]
    pn = math.fsum((K["Theta2_pNotP0"] * ps) ** s * S2 * P)
    return th1, pn


def _dual_bounds(ext, constants, K, psi, svals, ks, budget):
    """Small- and large-norm block bounds from exact counts near the dual curve."""
    M = constants.M
    phi = dual_phi(ext)
    gamma = (-2.0 * M, 2.0 * M)
    j0 = {k: int(math.floor(math.log2(math.ceil(2**k / (2 * M))))) for k in ks}
    js = range(min(j0.values()), max(ks) + 1)
    small_d = [2.0 * psi(2**k) for k in ks]
    large_d = [2.0 * psi(2 ** (k + 1) - 1) for k in ks]
    est = sum(len(svals) * (4 * M * 2 ** (j + 1) + 1) * 2**j for j in js)
    if budget is not None and est > budget:
        raise BudgetExceeded(int(est), budget, "pairs")
    small = {(k, s): 0.0 for k in ks for s in svals}
    large = {(k, s): 0.0 for k in ks for s in svals}
    for j in js:
        for s in svals:
            lam = s / 2.0
            cnt, w, fl = shell_stats(phi, gamma, 2**j, 2 ** (j + 1), small_d + large_d, lam, None)
            nk = len(ks)
            for i, k in enumerate(ks):
                if not j0[k] <= j <= k:
                    continue
                N = cnt[i] + fl[i]
                small[k, s] += 2.0 * N * (K["Theta2_P0_smallNorm"] * math.sqrt(psi(2**k) / 2**j)) ** s
                dl = large_d[i]
                W = w[nk + i] + fl[nk + i] * max(dl - 1e-9, 1e-300) ** (-lam)
                large[k, s] += 2.0 * (K["Theta2_P0_largeNorm"] * psi(2**k)) ** s * 2 ** (-j * s / 2) * W
    return small, large


def _kernel_costs(ext, psi, svals, k, q0, K, check):
    kind, prm = ext.kernel_params
    lo, hi = 2**k, 2 ** (k + 1) - 1
    cost, ntrip, mr, nv = kern.accumulate(kind, prm, ext.base.M, psi.array(hi), lo, hi,
                                          np.asarray(svals, dtype=float), q0, K, 0.0, check)
    costs = [[math.fsum(cost[:, c, i]) for c in range(4)] for i in range(len(svals))]
    return costs, ntrip.sum(axis=0), mr.max(axis=0), nv.sum(axis=0)


def _python_costs(ext, psi, svals, k, constants, check, budget):
    from .approx import theoretical_bound

    lo, hi = 2**k, 2 ** (k + 1) - 1
    terms = [[[] for _ in range(4)] for _ in svals]
    ntrip = np.zeros(4, dtype=np.int64)
    mr = np.zeros(4)
    nv = np.zeros(4, dtype=np.int64)
    for t, mu in enumerate_nonempty(ext, psi, lo, hi, budget):
        full = make_triple(ext, psi, constants, t.q1, t.q2, t.p)
        c = CASES.index(full.case)
        ntrip[c] += 1
        for i, s in enumerate(svals):
            terms[i][c].append(mu.total_length**s)
        if check and not (c == 1 and (constants.q0 is None or full.q < constants.q0)):
            r = mu.total_length / theoretical_bound(full, psi, constants)
            mr[c] = max(mr[c], r)
            nv[c] += r > 1.0
    costs = [[math.fsum(terms[i][c]) for c in range(4)] for i in range(len(svals))]
    return costs, ntrip, mr, nv


def cover_sums(ext: ExtendedCurve, psi: ApproxFunction, svals: Sequence[float], kmin, kmax,
               budget=DEFAULT_BUDGET, check=True):
    """One :class:`BlockLedger` per ``s``, sharing a single enumeration per block."""
    svals = [float(s) for s in svals]
    if not svals or any(not 0.0 < s <= 1.0 for s in svals):
        raise PreconditionError("every s must lie in (0, 1]")
    if not 0 <= kmin <= kmax:
        raise PreconditionError(f"need 0 <= kmin <= kmax, got {kmin}, {kmax}")
    constants = ext.base.constants(psi)
    Kd = bound_constants(constants.c1, constants.c2)
    Karr = _K_array(constants)
    q0 = constants.q0 if constants.q0 is not None else _NO_Q0
    ks = list(range(kmin, kmax + 1))
    if ext.kernel_params is not None:
        seen = int(count_nonempty(ext, psi, 2**kmin, 2 ** (kmax + 1) - 1).sum())
        if budget is not None and seen > budget:
            raise BudgetExceeded(seen, budget, "triples")
    small, large = _dual_bounds(ext, constants, Kd, psi, svals, ks, budget)
    ledgers = [BlockLedger(s, constants, {n: Kd[c] for n, c in zip(BUCKETS, CASES)}, []) for s in svals]
    for k in ks:
        if ext.kernel_params is not None:
            costs, ntrip, mr, nv = _kernel_costs(ext, psi, svals, k, q0, Karr, check)
        else:
            costs, ntrip, mr, nv = _python_costs(ext, psi, svals, k, constants, check, budget)
        for i, s in enumerate(svals):
            th1, pn = _series_bounds(constants, Kd, psi, s, k)
            bounds = dict(zip(BUCKETS, (float(th1), float(pn), float(small[k, s]), float(large[k, s]))))
            ledgers[i].blocks.append(BlockRecord(
                k=k,
                q_range=(2**k, 2 ** (k + 1)),
                costs=dict(zip(BUCKETS, (float(x) for x in costs[i]))),
                bounds=bounds,
                triples_seen=int(ntrip.sum()),
                triples_by_case=dict(zip(BUCKETS, (int(x) for x in ntrip))),
                envelope=float(psi(2**k) ** s * 2.0 ** (k * (3 - s))),
                max_ratio=dict(zip(BUCKETS, (float(x) for x in mr))) if check else {},
                violations=dict(zip(BUCKETS, (int(x) for x in nv))) if check else {},
                bound_asserted=constants.q0 is not None and 2**k >= constants.q0,
            ))
    return ledgers


def envelope_check(ext: ExtendedCurve, psi: ApproxFunction, Qlo, Qhi, rtol=0.0):
    """Compare every nonempty set with ``Qlo <= q <= Qhi`` against its case envelope.

    The ``p != p0`` envelope is skipped below ``q0``.  Returns
    ``(triples_by_case, max_ratio_by_case, violations_by_case)``.
    """
    if ext.kernel_params is None:
        raise PreconditionError("envelope_check needs a built-in curve")
    if not 1 <= Qlo <= Qhi:
        raise PreconditionError(f"need 1 <= Qlo <= Qhi, got {Qlo}, {Qhi}")
    constants = ext.base.constants(psi)
    q0 = constants.q0 if constants.q0 is not None else _NO_Q0
    kind, prm = ext.kernel_params
    _, ntrip, mr, nv = kern.accumulate(kind, prm, ext.base.M, psi.array(Qhi), Qlo, Qhi, np.ones(1),
                                       q0, _K_array(constants), float(rtol), True)
    return (dict(zip(CASES, (int(x) for x in ntrip.sum(axis=0)))),
            dict(zip(CASES, (float(x) for x in mr.max(axis=0)))),
            dict(zip(CASES, (int(x) for x in nv.sum(axis=0)))))


def cover_sum_by_case(ext, psi, s, kmin, kmax, budget=DEFAULT_BUDGET, check=True) -> BlockLedger:
    return cover_sums(ext, psi, [s], kmin, kmax, budget, check)[0]


def tail_decay_report(ledger: BlockLedger):
    """``(k, total, ratio_to_previous)`` per block; the first ratio is ``None``."""
    if len(ledger.blocks) < 2:
        raise PreconditionError("need at least two blocks")
    out, prev = [], None
    for b in ledger.blocks:
        tot = b.total
        out.append((b.k, tot, None if prev is None else (tot / prev if prev > 0 else math.inf)))
        prev = tot
    return out
