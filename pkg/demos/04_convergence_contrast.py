"""Dyadic block sums of s-costs on the parabola with psi(q) = q^-3.

The s-cost of a set is its measure to the power s.  Summing over block k
(heights 2^k .. 2^(k+1) - 1) gives a sequence that shrinks geometrically
when s is above the critical exponent 3/4 and grows below it.
"""
from __future__ import annotations

from dualapprox import ApproxFunction, builtin_curve, cover_sums, critical_exponent, extend, tail_decay_report

ext = extend(builtin_curve("parabola"))
psi = ApproxFunction.power(3)
print(f"critical exponent for nu=3: {critical_exponent(3)}")
for ledger in cover_sums(ext, psi, [0.9, 0.6], 0, 7):
    print(f"s = {ledger.s}")
    for k, total, ratio in tail_decay_report(ledger):
        block = ledger.blocks[k]
        bound = sum(block.bounds.values())
        tag = "" if ratio is None else f" ratio {ratio:.3f}"
        print(f"  k={k}: total {total:.4e}, block bound {bound:.4e}{tag}")
    print(f"  bound failures: {ledger.bound_failures()}")
