"""Approximation functions: positive, nonincreasing maps from heights to reals."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import PreconditionError

Q0_THRESHOLD = 0.125


@dataclass(frozen=True)
class ApproxFunction:
    """``psi(q)`` of one of three kinds.

    ``power``: ``q**-nu``.  ``table``: explicit values for ``q = 1..n``, held
    constant past the end of the table.  ``truncated``: the pointwise maximum
    of an inner function and ``q**(1 - (3 + eps0)/s)``.
    """

    kind: str
    nu: float = 0.0
    values: tuple = ()
    inner: Optional["ApproxFunction"] = None
    s: float = 1.0
    eps0: float = 0.1

    def __post_init__(self):
        if self.kind == "power":
            if not self.nu > 0:
                raise PreconditionError("power psi needs nu > 0")
        elif self.kind == "table":
            v = np.asarray(self.values, dtype=float)
            if v.size == 0 or np.any(~np.isfinite(v)) or np.any(v <= 0):
                raise PreconditionError("psi table values must be positive and finite")
            if np.any(np.diff(v) > 0):
                raise PreconditionError("psi table must be nonincreasing")
        elif self.kind == "truncated":
            if self.inner is None or not 0 < self.s <= 1 or not self.eps0 > 0:
                raise PreconditionError("truncated psi needs an inner psi, s in (0,1], eps0 > 0")
        else:
            raise PreconditionError(f"unknown psi kind {self.kind!r}")

    # constructors
    @classmethod
    def power(cls, nu):
        return cls("power", nu=float(nu))

    @classmethod
    def table(cls, values):
        return cls("table", values=tuple(float(v) for v in values))

    @classmethod
    def constant(cls, value):
        return cls.table([value])

    @classmethod
    def from_csv(cls, path):
        """Read ``q,value`` rows; heights must be 1, 2, ... in order."""
        rows = []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].strip().lower() == "q":
                    continue
                rows.append((int(row[0]), float(row[1])))
        if [q for q, _ in rows] != list(range(1, len(rows) + 1)):
            raise PreconditionError(f"{path}: heights must run 1, 2, ..., n")
        return cls.table([v for _, v in rows])

    def truncate(self, s, eps0=0.1):
        return ApproxFunction("truncated", inner=self, s=float(s), eps0=float(eps0))

    def __call__(self, q):
        qa = np.asarray(q)
        if np.any(qa < 1):
            raise PreconditionError("psi is defined on positive integers")
        qf = qa.astype(float)
        if self.kind == "power":
            out = qf ** -self.nu
        elif self.kind == "table":
            v = np.asarray(self.values)
            out = v[np.minimum(qa.astype(np.int64), v.size) - 1]
        else:
            out = np.maximum(self.inner(qa), qf ** (1.0 - (3.0 + self.eps0) / self.s))
        return float(out) if out.ndim == 0 else out

    def array(self, qmax):
        """Values at ``0..qmax``; index 0 holds ``inf`` as a sentinel."""
        out = np.empty(qmax + 1)
        out[0] = np.inf
        if qmax >= 1:
            out[1:] = self(np.arange(1, qmax + 1))
        return out

    def extrapolated(self, qmax):
        """True when evaluating up to ``qmax`` reads past the end of a table."""
        if self.kind == "table":
            return qmax > len(self.values)
        if self.kind == "truncated":
            return self.inner.extrapolated(qmax)
        return False

    @property
    def q0(self):
        """Least ``q`` with ``psi(q) <= 1/8``, or ``None`` if there is none."""
        if self(1) <= Q0_THRESHOLD:
            return 1
        if self.kind == "table" and self.values[-1] > Q0_THRESHOLD and self.inner is None:
            return None
        hi = 2
        while self(hi) > Q0_THRESHOLD:
            hi *= 2
            if hi > 2**62:
                return None
        lo = hi // 2  # psi(lo) > 1/8
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self(mid) <= Q0_THRESHOLD:
                hi = mid
            else:
                lo = mid
        return hi

    def describe(self):
        if self.kind == "power":
            return {"kind": "power", "nu": self.nu}
        if self.kind == "table":
            return {"kind": "table", "n": len(self.values)}
        return {"kind": "truncated", "s": self.s, "eps0": self.eps0, "inner": self.inner.describe()}
