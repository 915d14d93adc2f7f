"""Curves, their extensions and the dual curve.

For a pair (q1, q2) with q2 != 0 the linear form F(x) = q1 x + q2 f(x) has a
single critical point x0 = g(q1/q2), and its value there is q2 f*(q1/q2).
This script checks that identity and the quadratic band around x0.
"""
from __future__ import annotations

import numpy as np

from dualapprox import band_ratio, builtin_curve, extend

rng = np.random.default_rng(0)

for name, domain in (("parabola", (0.0, 1.0)), ("exponential", (0.0, 1.0)), ("circle_arc", (-0.5, 0.5))):
    ext = extend(builtin_curve(name, domain))
    c = ext.base
    print(f"{name} on [{c.a}, {c.b}]: c1={c.c1:.4f} c2={c.c2:.4f} M={c.M:.4f} C={c.C:.4f}")
    print(f"  slope domain J={ext.J}, extended domain I'=({ext.Iprime[0]:.3f}, {ext.Iprime[1]:.3f})")

    q1 = rng.integers(-200, 201, 2000)
    q2 = rng.integers(1, 201, 2000)
    keep = np.abs(q1) <= 2 * c.M * q2
    q1, q2 = q1[keep], q2[keep]
    x0 = ext.critical_point(q1, q2)
    resid = np.abs(q2 * ext.dual(q1 / q2) - ext.F(q1, q2, x0))
    print(f"  duality residual over {q1.size} pairs: {resid.max():.2e}")

    x = rng.uniform(c.a, c.b, q1.size)
    r = band_ratio(ext, q1, q2, x)
    lo, hi = np.sqrt(2 * c.c1**2 / c.c2), np.sqrt(2 * c.c2**2 / c.c1)
    print(f"  |F'(x)| / sqrt(|q2| |F(x)-F(x0)|) in [{r.min():.4f}, {r.max():.4f}], "
          f"predicted [{lo:.4f}, {hi:.4f}]")
