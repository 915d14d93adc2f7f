"""``dualapprox <command> <config.toml>``: batch runs with CSV or JSON output.

Exit codes: 0 ok, 2 invalid configuration, 3 budget exceeded, 4 internal error.
The worker count for compiled loops comes from ``DUALAPPROX_WORKERS``.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from fractions import Fraction

import numpy as np

from . import _jit
from .approx import CASES, iter_batches
from .config import ConfigError, RunConfig, load_config
from .counting import COUNT_HEADER, CountQuery, RationalPoly, count_near, dyadic_scan, weighted_sum
from .errors import BudgetExceeded, DualApproxError, PreconditionError
from .hausdorff import COVER_HEADER, DECAY_FACTOR, build_tail_cover, dimension_scan, hs_cost
from .ledger import BUCKETS, cover_sums, dual_phi, psi_hat, series_partial

EXIT_OK, EXIT_CONFIG, EXIT_BUDGET, EXIT_INTERNAL = 0, 2, 3, 4
ENUM_HEADER = ("q1", "q2", "p", "q", "case", "parts", "length")
COMMON = {"curve", "psi", "truncate", "output", "format", "seed", "budget"}


def _num(x):
    return repr(float(x))


class _Sink:
    """Output file (or stdout) opened once and closed on exit."""

    def __init__(self, cfg: RunConfig):
        self.path = cfg.output
        self.fh = open(self.path, "w", newline="") if self.path else sys.stdout

    def close(self):
        if self.path:
            self.fh.close()
        else:
            self.fh.flush()


def _write_rows(cfg, header, rows):
    sink = _Sink(cfg)
    try:
        if cfg.format == "csv":
            w = csv.writer(sink.fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
        else:
            json.dump([dict(zip(header, r)) for r in rows], sink.fh, indent=2)
            sink.fh.write("\n")
    finally:
        sink.close()


def _write_json(cfg, obj):
    sink = _Sink(cfg)
    try:
        json.dump(obj, sink.fh, indent=2)
        sink.fh.write("\n")
    finally:
        sink.close()


# ----------------------------------------------------------------------------


def duality_residual(ext, n=1000, seed=0, qmax=500):
    """Largest ``|q2 f*(q1/q2) - F(x0)|`` over random curvature-dominated pairs."""
    rng = np.random.default_rng(seed)
    M = ext.base.M
    worst = 0.0
    done = 0
    while done < n:
        q2 = int(rng.integers(1, qmax + 1)) * int(rng.choice([-1, 1]))
        lim = min(qmax, int(math.floor(2 * M * abs(q2))))
        q1 = int(rng.integers(-lim, lim + 1))
        x0 = ext.critical_point(q1, q2)
        r = abs(q2 * float(ext.dual(q1 / q2)) - float(ext.F(q1, q2, x0)))
        worst = max(worst, r)
        done += 1
    return worst


def cmd_curve_info(cfg: RunConfig):
    cfg.allow(COMMON | {"samples"})
    ext = cfg.curve()
    psi = cfg.psi(required=False)
    c = ext.base
    info = {
        "curve": c.name,
        "domain": [c.a, c.b],
        "c1": c.c1,
        "c2": c.c2,
        "M": c.M,
        "C": c.C,
        "J": list(ext.J),
        "I_prime": list(ext.Iprime),
        "q0": psi.q0 if psi is not None else None,
        "duality_residual": duality_residual(ext, cfg.number("samples", 1000, integer=True, lo=1), cfg.seed),
        "certificate_problems": c.check_certificate(),
    }
    if cfg.format == "json":
        _write_json(cfg, info)
    else:
        _write_rows(cfg, ("key", "value"), [(k, json.dumps(v)) for k, v in info.items()])


def _note_extrapolation(psi, qmax):
    if psi.extrapolated(qmax):
        print(f"note: psi table held constant past its last height, up to q = {qmax}", file=sys.stderr)


def _height_range(cfg):
    if cfg.has("Q"):
        Q = cfg.number("Q", integer=True, lo=1)
        return Q, Q
    Q0 = cfg.number("Q0", integer=True, lo=1)
    Q1 = cfg.number("Q1", integer=True, lo=1)
    if Q0 > Q1:
        cfg.fail("Q1", f"must be at least Q0 = {Q0}")
    return Q0, Q1


def cmd_enumerate(cfg: RunConfig):
    cfg.allow(COMMON | {"Q", "Q0", "Q1"})
    ext, psi = cfg.curve(), cfg.psi()
    Q0, Q1 = _height_range(cfg)
    _note_extrapolation(psi, Q1)
    if cfg.format == "json":
        cfg.fail("format", "enumerate writes csv only")
    sink = _Sink(cfg)
    try:
        w = csv.writer(sink.fh, lineterminator="\n")
        w.writerow(ENUM_HEADER)
        for b in iter_batches(ext, psi, Q0, Q1, cfg.budget, partial=True):
            rows = []
            for i in range(len(b)):
                n = int(b.nparts[i])
                pr = b.parts[i]
                parts = ";".join(f"{_num(pr[2 * j])}:{_num(pr[2 * j + 1])}" for j in range(n))
                rows.append((int(b.q1[i]), int(b.q2[i]), int(b.p[i]), int(b.q[i]), CASES[int(b.case[i])],
                             parts, _num(b.length[i])))
            w.writerows(rows)
    finally:
        sink.close()


def _phi(cfg):
    entry = cfg.get("phi", None, "dual")
    if entry == "dual":
        return dual_phi(cfg.curve())
    if isinstance(entry, dict) and "poly" in entry:
        try:
            return RationalPoly([Fraction(str(c)) for c in entry["poly"]])
        except (TypeError, ValueError) as exc:
            cfg.fail("phi", str(exc))
    cfg.fail("phi", 'expected "dual" or { poly = [c0, c1, ...] }')


def cmd_count(cfg: RunConfig):
    cfg.allow(COMMON | {"phi", "gamma", "R", "j", "delta", "k", "lam"})
    phi = _phi(cfg)
    gamma = cfg.numbers("gamma")
    if len(gamma) != 2 or not gamma[0] <= gamma[1]:
        cfg.fail("gamma", "expected [lo, hi] with lo <= hi")
    lam = cfg.number("lam", None, lo=0.0, hi=1.0, lo_open=True, hi_open=True)
    if cfg.has("j") or cfg.has("k"):
        js = cfg.numbers("j", integer=True, lo=0)
        ks = cfg.numbers("k", integer=True, lo=1)
        recs = dyadic_scan(phi, tuple(gamma), js, ks, lam, cfg.budget)
    else:
        Rs = cfg.numbers("R", integer=True, lo=1)
        ds = cfg.numbers("delta", lo=0.0, hi=1.0, lo_open=True, hi_open=True)
        recs = []
        for R in Rs:
            for d in ds:
                q = CountQuery(phi, tuple(gamma), R, d, lam)
                recs.append(weighted_sum(q, cfg.budget) if lam is not None else count_near(q, cfg.budget))
    rows = [
        ("" if r.j is None else r.j, "" if r.k is None else r.k, r.R, _num(r.delta), r.count,
         "" if r.weighted is None else _num(r.weighted), r.boundary_flags)
        for r in recs
    ]
    _write_rows(cfg, COUNT_HEADER, rows)


def cmd_sum(cfg: RunConfig):
    cfg.allow(COMMON | {"mode", "s", "Q", "kmin", "kmax", "eps0", "check"})
    mode = cfg.get("mode", str, "series")
    svals = cfg.numbers("s", lo=0.0, hi=1.0, lo_open=True)
    psi = cfg.psi()
    if mode == "series":
        Qs = cfg.numbers("Q", integer=True, lo=1)
        eps0 = cfg.number("eps0", None, lo=0.0, lo_open=True)
        rows = []
        for s in svals:
            src = psi_hat(psi, s, eps0) if eps0 is not None else psi
            for Q in Qs:
                rows.append((_num(s), Q, _num(series_partial(src, s, Q))))
        _write_rows(cfg, ("s", "Q", "value"), rows)
        return
    if mode != "ledger":
        cfg.fail("mode", f'expected "series" or "ledger", got {mode!r}')
    ext = cfg.curve()
    kmin = cfg.number("kmin", 0, integer=True, lo=0)
    kmax = cfg.number("kmax", integer=True, lo=kmin)
    check = bool(cfg.get("check", bool, True))
    _note_extrapolation(psi, 2 ** (kmax + 1) - 1)
    ledgers = cover_sums(ext, psi, svals, kmin, kmax, cfg.budget, check)
    if cfg.format == "json":
        objs = [led.to_dict() for led in ledgers]
        _write_json(cfg, objs[0] if len(objs) == 1 else objs)
        return
    rows = []
    for led in ledgers:
        for b in led.blocks:
            for n in BUCKETS:
                rows.append((_num(led.s), b.k, n, _num(b.costs[n]), _num(b.bounds[n]), b.triples_by_case[n]))
    _write_rows(cfg, ("s", "k", "bucket", "cost", "bound", "triples"), rows)


def cmd_cover(cfg: RunConfig):
    cfg.allow(COMMON | {"Q", "Q0", "Q1", "s", "rho"})
    ext, psi = cfg.curve(), cfg.psi()
    Q0, Q1 = _height_range(cfg)
    svals = cfg.numbers("s", lo=0.0, hi=1.0, lo_open=True)
    rho = cfg.number("rho", None, lo=0.0, lo_open=True)
    if rho is None:
        rho = 2.0 * psi(Q0) / Q0
    _note_extrapolation(psi, Q1)
    cover = build_tail_cover(ext, psi, Q0, Q1, cfg.budget)
    rows = []
    for s in svals:
        est = hs_cost(cover, s, rho, (Q0, Q1))
        rows.append((_num(s), "", Q0, Q1, _num(rho), _num(est.cost), est.interval_count, ""))
    _write_rows(cfg, COVER_HEADER, rows)


def cmd_dimscan(cfg: RunConfig):
    cfg.allow(COMMON | {"nu", "s_grid", "k_grid", "rho", "decay_factor"})
    if cfg.has("psi"):
        cfg.fail("psi", "dimscan uses psi = q^-nu; set nu instead")
    ext = cfg.curve()
    nu = cfg.number("nu", lo=2.0, lo_open=True)
    s_grid = cfg.numbers("s_grid", lo=0.0, hi=1.0, lo_open=True)
    k_grid = cfg.numbers("k_grid", integer=True, lo=0, hi=20)
    rho = cfg.number("rho", None, lo=0.0, lo_open=True)
    factor = cfg.number("decay_factor", DECAY_FACTOR, lo=0.0, lo_open=True)
    res = dimension_scan(ext, nu, s_grid, k_grid, rho, factor, cfg.budget)
    rows = [(_num(s), k, Q0, Q1, _num(r), _num(c), n, cls) for s, k, Q0, Q1, r, c, n, cls in res.rows]
    if cfg.format == "json":
        _write_json(cfg, {
            "nu": res.nu,
            "expected": res.expected,
            "s_hat": res.s_hat,
            "bracket": list(res.bracket),
            "note": res.note,
            "factors": {repr(s): f for s, f in res.factors.items()},
            "rows": [dict(zip(COVER_HEADER, r)) for r in rows],
        })
    else:
        _write_rows(cfg, COVER_HEADER, rows)
    shat = "none" if res.s_hat is None else f"{res.s_hat:.3f}"
    print(f"s_hat = {shat} (expected {res.expected:.3f}) {res.note}".rstrip(), file=sys.stderr)


COMMANDS = {
    "curve-info": cmd_curve_info,
    "enumerate": cmd_enumerate,
    "count": cmd_count,
    "sum": cmd_sum,
    "cover": cmd_cover,
    "dimscan": cmd_dimscan,
}


def main(argv=None):
    parser = argparse.ArgumentParser(prog="dualapprox", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("config", help="TOML config file")
    args = parser.parse_args(argv)
    _jit.workers_from_env()
    try:
        cfg = load_config(args.config)
        COMMANDS[args.command](cfg)
    except (ConfigError, PreconditionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except DualApproxError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
