"""Locating the dimension threshold from finite covers.

For psi(q) = q^-nu the tail covers are split into pieces of width rho and
their s-costs tracked across dyadic blocks.  The largest s that still grows
and the smallest s that shrinks bracket the estimate s_hat, to be compared
with 3/(nu + 1).  This takes about a minute.
"""
from __future__ import annotations

from dualapprox import builtin_curve, dimension_scan, extend

ext = extend(builtin_curve("parabola"))
grid = [round(0.05 + 0.1 * i, 2) for i in range(10)]
for nu in (3.0, 5.0):
    res = dimension_scan(ext, nu, grid, range(2, 8))
    print(f"nu = {nu}: expected {res.expected:.3f}, s_hat {res.s_hat}, bracket {res.bracket} {res.note}")
    for s in sorted(res.factors):
        print(f"  s={s:.2f} per-block factor {res.factors[s]:.3f} {res.classes[s]}")
