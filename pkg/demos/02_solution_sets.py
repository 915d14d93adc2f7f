"""Solution sets mu(q1, q2, p) and their case envelopes.

Every nonempty set at a given height falls into one of four cases.  The
script lists a few sets at a small height, then checks the measure against
the matching envelope for every nonempty set up to height 64.
"""
from __future__ import annotations

from collections import Counter

from dualapprox import (
    ApproxFunction,
    builtin_curve,
    enumerate_nonempty,
    envelope_check,
    extend,
    make_triple,
    mu_measure,
    theoretical_bound,
)

ext = extend(builtin_curve("parabola"))
psi = ApproxFunction.power(3)
constants = ext.base.constants(psi)
print(f"psi(q) = q^-3, q0 = {constants.q0}")

seen = Counter()
for triple, mu in enumerate_nonempty(ext, psi, 5, 5):
    full = make_triple(ext, psi, constants, triple.q1, triple.q2, triple.p)
    seen[full.case] += 1
    if seen[full.case] <= 2:
        bound = theoretical_bound(full, psi, constants)
        parts = ", ".join(f"[{lo:.6f}, {hi:.6f}]" for lo, hi in mu.parts)
        print(f"({full.q1:3d}, {full.q2:3d}, {full.p:3d}) {full.case:22s} {parts}  "
              f"measure {mu_measure(mu):.3e} <= {bound:.3e}")
print("sets at q = 5 by case:", dict(seen))

n, worst, viol = envelope_check(ext, psi, constants.q0, 64)
print(f"q = {constants.q0}..64: {sum(n.values())} sets, violations {sum(viol.values())}")
for case in n:
    print(f"  {case:22s} {n[case]:8d} sets, largest measure/bound {worst[case]:.3f}")
