"""Convex planar curves, their Taylor extensions, slope inverses and duals.

A curve is an evaluator triple ``(f, f', f'')`` on a closed interval
``I = [a, b]`` together with a convexity certificate ``c1 <= |f''| <= c2``.
:func:`extend` continues ``f`` to the whole real line by second order Taylor
polynomials at the endpoints, which keeps the certificate and makes ``f'`` a
monotone bijection of the reals.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .errors import CurveError, PreconditionError
from .rootfind import monotone_root, monotone_root_array

Evaluator = Callable[[np.ndarray], np.ndarray]

# kernel ids understood by the compiled enumeration kernels
KIND_PARABOLA, KIND_EXPONENTIAL, KIND_CIRCLE = 0, 1, 2
BUILTIN_NAMES = ("parabola", "exponential", "circle_arc")


@dataclass(frozen=True)
class CurveConstants:
    """Derived constants of a curve; ``q0`` is only set relative to some psi."""

    M: float
    C: float
    c1: float
    c2: float
    q0: Optional[int] = None


@dataclass(frozen=True, eq=False)
class PlanarCurve:
    f: Evaluator
    f1: Evaluator
    f2: Evaluator
    a: float
    b: float
    c1: float
    c2: float
    sign: int
    M: float
    C: float
    name: str = "custom"
    kind: Optional[int] = None
    # exact rational coefficients of the dual curve, lowest degree first
    dual_coeffs: Optional[tuple] = None

    @property
    def domain(self):
        return (self.a, self.b)

    def constants(self, psi=None) -> CurveConstants:
        q0 = psi.q0 if psi is not None else None
        return CurveConstants(self.M, self.C, self.c1, self.c2, q0)

    def check_certificate(self, n=10_000, rtol=1e-6):
        """Dense-sampling check of the convexity certificate and derivatives.

        Returns the list of failed checks (empty when the curve is valid).
        """
        x = np.linspace(self.a, self.b, n)
        problems = []
        d2 = self.f2(x)
        if np.any(np.abs(d2) < self.c1 * (1 - 1e-12)) or np.any(np.abs(d2) > self.c2 * (1 + 1e-12)):
            problems.append("|f''| leaves [c1, c2]")
        if np.any(np.sign(d2) != self.sign):
            problems.append("f'' changes sign")
        h = 1e-5 * max(1.0, self.b - self.a)
        xi = x[(x - h >= self.a) & (x + h <= self.b)]
        for name, lower, upper in (("f'", self.f, self.f1), ("f''", self.f1, self.f2)):
            fd = (lower(xi + h) - lower(xi - h)) / (2 * h)
            exact = upper(xi)
            if np.any(np.abs(fd - exact) > rtol * (1 + np.abs(exact))):
                problems.append(f"{name} disagrees with finite differences")
        return problems


def _parabola(a, b):
    m = max(abs(a), abs(b))
    return PlanarCurve(
        f=lambda x: np.asarray(x, dtype=float) ** 2,
        f1=lambda x: 2.0 * np.asarray(x, dtype=float),
        f2=lambda x: np.full(np.shape(x), 2.0),
        a=a, b=b, c1=2.0, c2=2.0, sign=1,
        M=1.0 + 2.0 * m,
        C=max(abs(t) + t * t + 1.0 for t in (a, b)),
        name="parabola", kind=KIND_PARABOLA,
        dual_coeffs=(Fraction(0), Fraction(0), Fraction(-1, 4)),
    )


def _exponential(a, b):
    return PlanarCurve(
        f=np.exp, f1=np.exp, f2=np.exp,
        a=a, b=b, c1=math.exp(a), c2=math.exp(b), sign=1,
        M=1.0 + math.exp(b),
        C=max(abs(t) + math.exp(t) + 1.0 for t in (a, b)),
        name="exponential", kind=KIND_EXPONENTIAL,
    )


def _circle_arc(a, b):
    if a < -0.9 or b > 0.9:
        raise CurveError("circle_arc domain must lie inside [-0.9, 0.9]")
    lo = 0.0 if a <= 0.0 <= b else min(abs(a), abs(b))
    hi = max(abs(a), abs(b))
    cands = [a, b] + [t for t in (0.0, -math.sqrt(0.5), math.sqrt(0.5)) if a <= t <= b]
    return PlanarCurve(
        f=lambda x: np.sqrt(1.0 - np.asarray(x, dtype=float) ** 2),
        f1=lambda x: -np.asarray(x, dtype=float) / np.sqrt(1.0 - np.asarray(x, dtype=float) ** 2),
        f2=lambda x: -(1.0 - np.asarray(x, dtype=float) ** 2) ** -1.5,
        a=a, b=b,
        c1=(1.0 - lo * lo) ** -1.5, c2=(1.0 - hi * hi) ** -1.5, sign=-1,
        M=1.0 + hi / math.sqrt(1.0 - hi * hi),
        C=max(abs(t) + math.sqrt(1.0 - t * t) + 1.0 for t in cands),
        name="circle_arc", kind=KIND_CIRCLE,
    )


_BUILDERS = {"parabola": _parabola, "exponential": _exponential, "circle_arc": _circle_arc}


def builtin_curve(name: str, domain=(0.0, 1.0)) -> PlanarCurve:
    """One of the built-in curves with exact analytic constants.

    >>> c = builtin_curve("parabola", (0.0, 1.0))
    >>> (c.c1, c.c2, c.M, c.C)
    (2.0, 2.0, 3.0, 3.0)
    """
    try:
        build = _BUILDERS[name]
    except KeyError:
        raise CurveError(f"unknown curve {name!r}; expected one of {BUILTIN_NAMES}") from None
    a, b = float(domain[0]), float(domain[1])
    if not a < b:
        raise CurveError(f"empty domain [{a}, {b}]")
    return build(a, b)


def curve_from_evaluators(f, f1, f2, domain, samples=10_000, margin=0.01, name="custom"):
    """Wrap a user curve, estimating ``c1, c2, M, C`` by dense sampling.

    Sampled extrema are relaxed outward by ``margin`` because the true
    extrema of a black-box evaluator are not available.
    """
    a, b = float(domain[0]), float(domain[1])
    if not a < b:
        raise CurveError(f"empty domain [{a}, {b}]")
    x = np.linspace(a, b, samples)
    d2 = np.asarray(f2(x), dtype=float)
    if not np.all(np.isfinite(d2)) or np.any(d2 == 0) or not (np.all(d2 > 0) or np.all(d2 < 0)):
        raise CurveError("f'' must be bounded away from zero with a fixed sign on the domain")
    ad2 = np.abs(d2)
    return PlanarCurve(
        f=f, f1=f1, f2=f2, a=a, b=b,
        c1=float(ad2.min()) * (1 - margin), c2=float(ad2.max()) * (1 + margin),
        sign=int(np.sign(d2[0])),
        M=(1.0 + float(np.max(np.abs(f1(x))))) * (1 + margin),
        C=float(np.max(np.abs(x) + np.abs(f(x)) + 1.0)) * (1 + margin),
        name=name,
    )


@dataclass(frozen=True, eq=False)
class ExtendedCurve:
    """A curve continued to all reals, with slope inverse ``g`` and dual ``f*``."""

    base: PlanarCurve
    ends: tuple = field(repr=False)  # (f(a), f'(a), f''(a), f(b), f'(b), f''(b))

    @property
    def J(self):
        return (-2.0 * self.base.M, 2.0 * self.base.M)

    @property
    def Iprime(self):
        lo, hi = self.slope_inverse(np.array(self.J))
        return (float(min(lo, hi)), float(max(lo, hi)))

    @property
    def kernel_params(self):
        """``(kind, params)`` for the compiled kernels, or ``None``."""
        if self.base.kind is None:
            return None
        prm = np.array((self.base.a, self.base.b) + self.ends, dtype=float)
        return self.base.kind, prm

    # evaluators on the whole line
    def fext(self, x):
        x = np.asarray(x, dtype=float)
        c, (fa, f1a, f2a, fb, f1b, f2b) = self.base, self.ends
        inner = c.f(np.clip(x, c.a, c.b))
        da, db = x - c.a, x - c.b
        out = np.where(x > c.b, fb + f1b * db + 0.5 * f2b * db * db,
                       np.where(x < c.a, fa + f1a * da + 0.5 * f2a * da * da, inner))
        return out[()] if out.ndim == 0 else out

    def f1ext(self, x):
        x = np.asarray(x, dtype=float)
        c, (fa, f1a, f2a, fb, f1b, f2b) = self.base, self.ends
        inner = c.f1(np.clip(x, c.a, c.b))
        out = np.where(x > c.b, f1b + f2b * (x - c.b),
                       np.where(x < c.a, f1a + f2a * (x - c.a), inner))
        return out[()] if out.ndim == 0 else out

    def f2ext(self, x):
        x = np.asarray(x, dtype=float)
        c, (_, _, f2a, _, _, f2b) = self.base, self.ends
        inner = np.asarray(c.f2(np.clip(x, c.a, c.b)), dtype=float)
        out = np.where(x > c.b, f2b, np.where(x < c.a, f2a, inner))
        return out[()] if out.ndim == 0 else out

    def slope_inverse(self, y):
        """``g(y)``: the unique ``x`` with ``f'(x) = -y`` on the extension."""
        c = self.base
        m = 0.5 * (c.a + c.b)
        y_arr = np.asarray(y, dtype=float)
        target = -y_arr
        # |f1ext'| >= c1 everywhere, so the root is within |f1ext(m) - target| / c1 of m
        r = np.abs(self.f1ext(m) - target) / c.c1 * 1.001 + 1e-12 * (1.0 + abs(m))
        if y_arr.ndim == 0:
            return monotone_root(self.f1ext, self.f2ext, float(target), m - float(r), m + float(r))
        return monotone_root_array(self.f1ext, self.f2ext, target, m - r, m + r)

    g = slope_inverse

    def critical_point(self, q1, q2):
        """``x0`` with ``q1 + q2 f'(x0) = 0``."""
        if np.any(np.asarray(q2) == 0):
            raise PreconditionError("critical point needs q2 != 0")
        return self.slope_inverse(np.asarray(q1, dtype=float) / np.asarray(q2, dtype=float))

    def F(self, q1, q2, x):
        """The linear form ``q1 x + q2 f(x)`` on the extension."""
        return q1 * np.asarray(x, dtype=float) + q2 * self.fext(x)

    def dF(self, q1, q2, x):
        return q1 + q2 * self.f1ext(x)

    def dual(self, y):
        """``f*(y) = y g(y) + f(g(y))``."""
        gy = self.slope_inverse(y)
        return np.asarray(y, dtype=float) * gy + self.fext(gy)

    fstar = dual


def extend(curve: PlanarCurve) -> ExtendedCurve:
    """Continue ``curve`` past its endpoints by second order Taylor polynomials."""
    a, b = curve.a, curve.b
    ends = tuple(float(np.asarray(fn(np.array(t)))) for t in (a, b) for fn in (curve.f, curve.f1, curve.f2))
    return ExtendedCurve(base=curve, ends=ends)


def slope_inverse(ext: ExtendedCurve, y):
    return ext.slope_inverse(y)


def critical_point(ext: ExtendedCurve, q1, q2):
    return ext.critical_point(q1, q2)


def F_eval(ext: ExtendedCurve, q1, q2, x):
    return ext.F(q1, q2, x)


def dual_eval(ext: ExtendedCurve, y):
    return ext.dual(y)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


def taylor_gap(ext: ExtendedCurve, q1, q2, x):
    """``(F(x) - F(x0), F'(x))`` without cancellation near ``x0``.

    Uses ``F'(x0) = 0``: with ``h = x - x0``, ``F(x) - F(x0)`` is
    ``q2 h^2 int_0^1 (1-u) f''(x0 + u h) du`` and ``F'(x)`` is
    ``q2 h int_0^1 f''(x0 + u h) du``.  The integrals are done by Gauss-Legendre
    on pieces split at the curve endpoints, where the extension's ``f''`` has kinks.
    """
    q1, q2, x = np.broadcast_arrays(np.asarray(q1, dtype=float), np.asarray(q2, dtype=float),
                                    np.asarray(x, dtype=float))
    x0 = np.asarray(ext.critical_point(q1, q2), dtype=float)
    h = x - x0
    safe = np.where(h == 0, 1.0, h)
    cuts = [np.clip((t - x0) / safe, 0.0, 1.0) for t in (ext.base.a, ext.base.b)]
    knots = np.sort(np.stack([np.zeros_like(h)] + cuts + [np.ones_like(h)]), axis=0)
    gap = np.zeros_like(h)
    slope = np.zeros_like(h)
    for lo, hi in zip(knots[:-1], knots[1:]):
        half = 0.5 * (hi - lo)
        u = lo[..., None] + half[..., None] * (_GL_NODES + 1.0)
        w = half[..., None] * _GL_WEIGHTS
        f2 = np.asarray(ext.f2ext(x0[..., None] + u * h[..., None]), dtype=float)
        gap += np.sum(w * (1.0 - u) * f2, axis=-1)
        slope += np.sum(w * f2, axis=-1)
    return q2 * h * h * gap, q2 * h * slope


def band_ratio(ext: ExtendedCurve, q1, q2, x):
    """``|F'(x)| / sqrt(|q2| |F(x) - F(x0)|)`` for ``q2 != 0``, ``x != x0``."""
    gap, slope = taylor_gap(ext, q1, q2, x)
    return np.abs(slope) / np.sqrt(np.abs(q2) * np.abs(gap))
