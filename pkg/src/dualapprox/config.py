"""Run configuration: a flat TOML key table per experiment.

Example::

    curve = { name = "parabola", a = 0.0, b = 1.0 }
    psi = { kind = "power", nu = 3.0 }
    Q = 1
    output = "triples.csv"

Every error message names the offending key and, when it can be located,
its line in the file.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import tomli

from .curves import BUILTIN_NAMES, builtin_curve, extend
from .errors import DualApproxError
from .psi import ApproxFunction

DEFAULT_BUDGET = 50_000_000
FORMATS = ("csv", "json")


class ConfigError(DualApproxError):
    """Malformed or out-of-range configuration."""


_MISSING = object()


@dataclass
class RunConfig:
    path: str
    data: dict
    lines: dict = field(default_factory=dict)

    # basic access -----------------------------------------------------------
    def where(self, key):
        line = self.lines.get(key)
        return f"{self.path}:{line}" if line else self.path

    def fail(self, key, msg):
        raise ConfigError(f"{self.where(key)}: {key}: {msg}")

    def allow(self, keys):
        """Reject keys outside ``keys``."""
        for key in self.data:
            if key not in keys:
                self.fail(key, f"unknown key; allowed: {sorted(keys)}")

    def has(self, key):
        return key in self.data

    def get(self, key, kind=None, default=_MISSING):
        if key not in self.data:
            if default is _MISSING:
                raise ConfigError(f"{self.path}: missing required key {key!r}")
            return default
        val = self.data[key]
        if kind is None:
            return val
        try:
            return _coerce(val, kind)
        except (TypeError, ValueError) as exc:
            self.fail(key, str(exc))

    def number(self, key, default=_MISSING, lo=None, hi=None, lo_open=False, hi_open=False, integer=False):
        v = self.get(key, int if integer else float, default)
        if v is default and default is not _MISSING:
            return v
        _check_range(self, key, v, lo, hi, lo_open, hi_open)
        return v

    def numbers(self, key, default=_MISSING, integer=False, **rng):
        raw = self.get(key, None, default)
        if raw is default and default is not _MISSING:
            return raw
        items = raw if isinstance(raw, list) else [raw]
        out = []
        for item in items:
            try:
                v = _coerce(item, int if integer else float)
            except (TypeError, ValueError) as exc:
                self.fail(key, str(exc))
            _check_range(self, key, v, **rng)
            out.append(v)
        return out

    # common keys ------------------------------------------------------------
    @property
    def output(self):
        out = self.get("output", str, None)
        if out is None:
            return None
        path = Path(out)
        if not path.is_absolute():
            path = Path(self.path).resolve().parent / path
        return str(path)

    @property
    def format(self):
        fmt = self.get("format", str, "csv")
        if fmt not in FORMATS:
            self.fail("format", f"expected one of {FORMATS}, got {fmt!r}")
        return fmt

    @property
    def seed(self):
        return self.number("seed", 0, integer=True, lo=0)

    @property
    def budget(self):
        b = self.get("budget", int, DEFAULT_BUDGET)
        if b <= 0:
            self.fail("budget", "must be positive")
        return b

    def curve(self):
        entry = self.get("curve", dict)
        name = entry.get("name")
        if name not in BUILTIN_NAMES:
            self.fail("curve", f"name must be one of {BUILTIN_NAMES}, got {name!r}")
        unknown = set(entry) - {"name", "a", "b"}
        if unknown:
            self.fail("curve", f"unknown fields {sorted(unknown)}")
        try:
            a, b = float(entry.get("a", 0.0)), float(entry.get("b", 1.0))
            return extend(builtin_curve(name, (a, b)))
        except (TypeError, ValueError) as exc:
            self.fail("curve", str(exc))

    def psi(self, required=True):
        if not self.has("psi"):
            if required:
                raise ConfigError(f"{self.path}: missing required key 'psi'")
            return None
        entry = self.get("psi", dict)
        kind = entry.get("kind")
        try:
            if kind == "power":
                psi = ApproxFunction.power(float(entry["nu"]))
            elif kind == "constant":
                psi = ApproxFunction.constant(float(entry["value"]))
            elif kind == "table":
                if "path" in entry:
                    p = Path(entry["path"])
                    if not p.is_absolute():
                        p = Path(self.path).resolve().parent / p
                    psi = ApproxFunction.from_csv(str(p))
                else:
                    psi = ApproxFunction.table([float(v) for v in entry["values"]])
            else:
                self.fail("psi", f"kind must be power, constant or table, got {kind!r}")
        except KeyError as exc:
            self.fail("psi", f"missing field {exc.args[0]!r}")
        except (TypeError, ValueError, OSError) as exc:
            self.fail("psi", str(exc))
        if self.has("truncate"):
            tr = self.get("truncate", dict)
            try:
                psi = psi.truncate(float(tr["s"]), float(tr.get("eps0", 0.1)))
            except KeyError as exc:
                self.fail("truncate", f"missing field {exc.args[0]!r}")
            except (TypeError, ValueError) as exc:
                self.fail("truncate", str(exc))
        return psi


def _coerce(val, kind):
    if kind is float:
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise TypeError(f"expected a number, got {val!r}")
        return float(val)
    if kind is int:
        if isinstance(val, bool) or not isinstance(val, int):
            raise TypeError(f"expected an integer, got {val!r}")
        return val
    if kind is str:
        if not isinstance(val, str):
            raise TypeError(f"expected a string, got {val!r}")
        return val
    if kind is bool:
        if not isinstance(val, bool):
            raise TypeError(f"expected true or false, got {val!r}")
        return val
    if kind is dict:
        if not isinstance(val, dict):
            raise TypeError(f"expected an inline table, got {val!r}")
        return val
    return kind(val)


def _check_range(cfg, key, v, lo=None, hi=None, lo_open=False, hi_open=False):
    if lo is not None and (v < lo or (lo_open and v == lo)):
        cfg.fail(key, f"value {v} below allowed range")
    if hi is not None and (v > hi or (hi_open and v == hi)):
        cfg.fail(key, f"value {v} above allowed range")


_KEY_RE = re.compile(r"^\s*([A-Za-z0-9_\-]+)\s*=")


def load_config(path) -> RunConfig:
    path = str(path)
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from None
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    lines = {}
    for i, line in enumerate(text.splitlines(), start=1):
        m = _KEY_RE.match(line)
        if m and m.group(1) not in lines:
            lines[m.group(1)] = i
    return RunConfig(path, data, lines)
