"""Rational points near a curve.

Counts pairs (r, t) with R <= r < 2R, t/r in Gamma and ||r phi(t/r)|| < delta,
using exact modular arithmetic for polynomial phi.  For phi(u) = u^2 the
count behaves like delta R^2 once delta R is large; below that the integer
points on the curve itself contribute a term of order R log R.
"""
from __future__ import annotations

import math

from dualapprox import CountQuery, RationalPoly, count_near, dyadic_scan, fit_exponents

phi = RationalPoly([0, 0, 1])
rec = count_near(CountQuery(phi, (0.0, 1.0), 2, 0.25))
print(f"R=2, delta=1/4: count {rec.count}, boundary flags {rec.boundary_flags}")

along_R = dyadic_scan(phi, (0.0, 1.0), range(4, 12), [6])
table = along_R + dyadic_scan(phi, (0.0, 1.0), [10], range(2, 7))
for r in along_R:
    print(f"R=2^{r.j:2d} delta=2^-6: count {r.count:9d}  count/(delta R^2) {r.count / (r.delta * r.R**2):.3f}"
              f"  delta R = {r.delta * r.R:g}")
slope_R, slope_d, rms = fit_exponents(table, k=6, j=10)
print(f"fitted slope in R: {slope_R:.3f}, in delta: {slope_d:.3f}, residual rms {rms:.3f}")

# the same fit restricted to delta R >= 4 approaches the main term exponent
tail = [r for r in along_R if r.delta * r.R >= 4] + table[len(along_R):]
print(f"slope in R for delta R >= 4: {fit_exponents(tail, k=6, j=10)[0]:.3f}")
print(f"R log R at R=2^4: {16 * math.log(16):.1f}, delta R^2 at R=2^4: {16**2 / 64:.1f}")
