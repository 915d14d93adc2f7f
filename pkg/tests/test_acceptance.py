"""End-to-end acceptance checks.  Each test records one pass/fail line."""
from __future__ import annotations

import math
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
import tomli

from dualapprox import (
    ApproxFunction,
    CountQuery,
    RationalPoly,
    band_ratio,
    builtin_curve,
    count_near,
    cover_sums,
    critical_exponent,
    dimension_scan,
    dyadic_scan,
    envelope_check,
    extend,
    fit_exponents,
    make_triple,
    mu_measure,
    psi_hat,
    series_partial,
    solve_mu,
    theoretical_bound,
)
from dualapprox.approx import iter_batches
from dualapprox.cli import main

KNOBS = tomli.loads((Path(__file__).parent / "acceptance.toml").read_text())
PSI3 = ApproxFunction.power(3)
DOMAINS = {"parabola": (0.0, 1.0), "exponential": (0.0, 1.0), "circle_arc": (-0.5, 0.5)}


def curve(name):
    return extend(builtin_curve(name, DOMAINS[name]))


def theta2_pairs(ext, qmax, n, rng):
    """``n`` random pairs with ``q <= qmax``, ``q2 != 0`` and ``|q1| <= 2M|q2|``."""
    q1 = rng.integers(-qmax, qmax + 1, 4 * n)
    q2 = rng.integers(-qmax, qmax + 1, 4 * n)
    keep = (q2 != 0) & (np.abs(q1) <= 2.0 * ext.base.M * np.abs(q2))
    assert keep.sum() >= n
    return q1[keep][:n], q2[keep][:n]


@pytest.fixture(scope="module")
def parabola_ledgers():
    """Block ledgers for the parabola with psi = q^-3, k = 0..9, both s values."""
    knobs = KNOBS["convergence"]
    ext = curve(knobs["curve"])
    svals = [knobs["s_converge"], knobs["s_diverge"]]
    ledgers = cover_sums(ext, ApproxFunction.power(knobs["nu"]), svals, 0, max(knobs["blocks"]),
                         budget=None, check=True)
    return dict(zip(svals, ledgers))


@pytest.fixture(scope="module")
def scans():
    knobs = KNOBS["dimension"]
    ext = curve(knobs["curve"])
    return {nu: dimension_scan(ext, float(nu), knobs["s_grid"], knobs["k_grid"], factor=knobs["factor"])
            for nu in knobs["targets"]}


def test_01_duality_identity(report):
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    worst = {}
    for name in ("parabola", "exponential"):
        ext = curve(name)
        q1, q2 = theta2_pairs(ext, 500, 10_000, rng)
        x0 = ext.critical_point(q1, q2)
        worst[name] = float(np.max(np.abs(q2 * ext.dual(q1 / q2) - ext.F(q1, q2, x0))))
    elapsed = time.perf_counter() - start
    ok = max(worst.values()) <= 1e-8 and elapsed < 5.0
    report(1, "duality identity", ok,
           f"max residual {max(worst.values()):.2e} (<= 1e-8), {elapsed:.2f} s (< 5 s)")
    assert ok


def test_02_band_ratio(report):
    rng = np.random.default_rng(102)
    out = {}
    for name in ("parabola", "exponential"):
        ext = curve(name)
        q1, q2 = theta2_pairs(ext, 500, 10_000, rng)
        x = rng.uniform(ext.base.a, ext.base.b, q1.size)
        x0 = ext.critical_point(q1, q2)
        keep = x != x0
        out[name] = band_ratio(ext, q1[keep], q2[keep], x[keep])
    c = curve("exponential").base
    lo, hi = math.sqrt(2 * c.c1**2 / c.c2), math.sqrt(2 * c.c2**2 / c.c1)
    par_err = float(np.max(np.abs(out["parabola"] - 2.0)))
    e = out["exponential"]
    ok = par_err <= 1e-9 and e.min() >= lo - 1e-6 and e.max() <= hi + 1e-6
    report(2, "band ratio", ok,
           f"parabola |ratio-2| <= {par_err:.1e}; exponential in [{e.min():.4f}, {e.max():.4f}] "
           f"within [{lo:.4f}, {hi:.4f}]")
    assert ok


def _grid_mismatches(ext, psi, triples, grid, fgrid, band=1e-9):
    bad = checked = 0
    for q1, q2, p in triples:
        mu = solve_mu(ext, psi, q1, q2, p)
        q = max(abs(q1), abs(q2))
        pts = [grid]
        vals = [fgrid]
        for lo, hi in mu.parts:
            w = max(hi - lo, 1e-12)
            local = np.linspace(lo - w, hi + w, 1001)
            local = local[(local >= ext.base.a) & (local <= ext.base.b)]
            pts.append(local)
            vals.append(np.asarray(ext.fext(local)))
        x = np.concatenate(pts)
        fx = np.concatenate(vals)
        inside = np.abs(q1 * x + q2 * fx - p) < psi(q)
        claimed = mu.contains(x)
        near = np.zeros(x.size, dtype=bool)
        for lo, hi in mu.parts:
            near |= (np.abs(x - lo) <= band) | (np.abs(x - hi) <= band)
        bad += int(np.sum((inside != claimed) & ~near))
        checked += int(np.sum(inside & ~near))
    return bad, checked


def test_03_mu_oracle(report):
    rng = np.random.default_rng(103)
    bad = inside = n = 0
    for name in ("parabola", "exponential"):
        ext = curve(name)
        grid = np.linspace(ext.base.a, ext.base.b, 100_000)
        fgrid = np.asarray(ext.fext(grid))
        triples = []
        while len(triples) < 1000:
            q1, q2 = (int(v) for v in rng.integers(-200, 201, 2))
            if q1 == 0 and q2 == 0:
                continue
            xr = rng.uniform(ext.base.a, ext.base.b)
            triples.append((q1, q2, int(round(float(ext.F(q1, q2, xr))))))
        b, c = _grid_mismatches(ext, PSI3, triples, grid, fgrid)
        bad += b
        inside += c
        n += len(triples)
    ok = bad == 0 and inside > 0
    report(3, "mu-oracle equivalence", ok, f"{n} triples, {bad} mismatches, {inside} interior hits checked")
    assert ok


@pytest.mark.slow
def test_04_envelope_domination(report, parabola_ledgers):
    led = next(iter(parabola_ledgers.values()))
    q0 = led.constants.q0
    viol = sum(sum(b.violations.values()) for b in led.blocks if b.q_range[0] >= q0)
    seen = sum(b.triples_seen for b in led.blocks if b.q_range[0] >= q0)
    worst = max(max(b.max_ratio.values()) for b in led.blocks if b.q_range[0] >= q0)
    Q, Q_other = KNOBS["envelope"]["Q"], KNOBS["envelope"]["Q_other"]
    top = max(b.q_range[1] for b in led.blocks) - 1
    n, ratio, v = envelope_check(curve("parabola"), PSI3, top + 1, Q)
    lines = [f"parabola q={q0}..{Q}: {seen + sum(n.values())} triples"]
    viol += sum(v.values())
    worst = max(worst, *ratio.values())
    for name in ("exponential", "circle_arc"):
        ext = curve(name)
        n, ratio, v = envelope_check(ext, PSI3, ext.base.constants(PSI3).q0, Q_other)
        viol += sum(v.values())
        worst = max(worst, *ratio.values())
        lines.append(f"{name} q<={Q_other}: {sum(n.values())} triples")
    # the compiled check against the reference solver and bound on a sample
    rng = np.random.default_rng(104)
    ref_viol = sampled = 0
    for name in DOMAINS:
        ext = curve(name)
        cst = ext.base.constants(PSI3)
        for batch in iter_batches(ext, PSI3, 64, 64):
            for i in rng.choice(len(batch), 200, replace=False):
                t = batch.triple(int(i))
                full = make_triple(ext, PSI3, cst, t.q1, t.q2, t.p)
                ref_viol += mu_measure(solve_mu(ext, PSI3, t.q1, t.q2, t.p)) > theoretical_bound(full, PSI3, cst)
                sampled += 1
    viol += ref_viol
    ok = viol == 0
    report(4, "envelope domination", ok,
           f"{viol} violations, max measure/bound {worst:.3f}; " + ", ".join(lines)
           + f"; {sampled} reference-path samples at q=64")
    assert ok


def test_05_exact_count(report):
    rec = count_near(CountQuery(RationalPoly([0, 0, 1]), (0.0, 1.0), 2, 0.25))
    # brute force over r in [2, 4), t/r in [0, 1]
    brute = sum(1 for r in range(2, 4) for t in range(0, r + 1)
                if min(Fraction(t * t, r) % 1, 1 - Fraction(t * t, r) % 1) < Fraction(1, 4))
    ok = rec.count == 4 == brute and rec.boundary_flags == 0
    report(5, "exact count", ok, f"count {rec.count} (brute force {brute}), boundary_flags {rec.boundary_flags}")
    assert ok


def test_06_count_scaling(report):
    knobs = KNOBS["count_scaling"]
    phi = RationalPoly([0, 0, 1])
    start = time.perf_counter()
    along_j = dyadic_scan(phi, (0.0, 1.0), knobs["j"], [knobs["k_fixed"]], budget=None)
    along_k = dyadic_scan(phi, (0.0, 1.0), [knobs["j_fixed"]], knobs["k"], budget=None)
    slope_R, slope_d, _ = fit_exponents(along_j + along_k, k=knobs["k_fixed"], j=knobs["j_fixed"])
    elapsed = time.perf_counter() - start
    (rlo, rhi), (dlo, dhi) = knobs["slope_R"], knobs["slope_delta"]
    ok = rlo <= slope_R <= rhi and dlo <= slope_d <= dhi and elapsed < 120
    report(6, "near-curve count scaling", ok,
           f"slope_R {slope_R:.4f} (want [{rlo}, {rhi}]), slope_delta {slope_d:.4f} (want [{dlo}, {dhi}]), "
           f"{elapsed:.1f} s")
    assert ok


def test_07_series_numerics(report):
    value = series_partial(PSI3, 1.0, 10)
    series_oracle = sum(Fraction(1, q**2) for q in range(1, 11))
    exact_ce = critical_exponent(3) == 0.75
    rng = np.random.default_rng(107)
    q = rng.integers(1, 10**6, 10_000)
    nu = rng.uniform(2.01, 6.0, q.size)
    s = rng.uniform(0.05, 1.0, q.size)
    eps = rng.uniform(0.0, 1.0, q.size)
    bad = 0
    for qi, ni, si, ei in zip(q.tolist(), nu, s, eps):
        inner = ApproxFunction.power(ni)
        got = psi_hat(inner, si, ei)(qi)
        # independent oracle in Python floats; numpy's pow may differ by an ulp
        ref = max(float(qi) ** -ni, float(qi) ** (1.0 - (3.0 + ei) / si))
        floor_ = float(np.asarray(qi, dtype=float) ** (1.0 - (3.0 + ei) / si))
        exact = got == max(inner(qi), floor_) and got >= inner(qi) and got >= floor_
        bad += not (exact and math.isclose(got, ref, rel_tol=1e-13))
    ok = abs(value - 1.549768) <= 1e-6 and abs(value - float(series_oracle)) < 1e-15 and exact_ce and bad == 0
    report(7, "series numerics", ok,
           f"series {value:.7f}, critical_exponent(3) == 0.75: {exact_ce}, psi_hat failures {bad}/10000")
    assert ok


@pytest.mark.slow
def test_08_convergence_contrast(report, parabola_ledgers):
    knobs = KNOBS["convergence"]
    msgs, ok = [], True
    for s, want in ((knobs["s_converge"], "le"), (knobs["s_diverge"], "ge")):
        tot = {b.k: b.total for b in parabola_ledgers[s].blocks}
        ks = knobs["blocks"]
        ratios = [tot[ks[i + 1]] / tot[ks[i]] for i in range(len(ks) - 1)]
        if want == "le":
            ok &= all(r <= knobs["max_ratio"] for r in ratios)
        else:
            ok &= all(r >= knobs["min_ratio"] for r in ratios)
        msgs.append(f"s={s}: ratios " + ", ".join(f"{r:.3f}" for r in ratios))
    report(8, "convergence contrast", ok, "; ".join(msgs) + f" over blocks {knobs['blocks']}")
    assert ok


@pytest.mark.slow
def test_09_dimension_transition(report, scans):
    knobs = KNOBS["dimension"]
    msgs, ok = [], True
    for nu, target in knobs["targets"].items():
        res = scans[nu]
        hit = res.s_hat is not None and abs(res.s_hat - target) <= knobs["tolerance"]
        ok &= hit
        msgs.append(f"nu={nu}: s_hat {res.s_hat if res.s_hat is None else round(res.s_hat, 6)} (target {target} +- {knobs['tolerance']})")
    report(9, "dimension transition", ok, "; ".join(msgs) + f", k={knobs['k_grid'][0]}..{knobs['k_grid'][-1]}")
    assert ok


CLI_CASES = {
    "curve-info": ('curve = { name = "exponential" }\npsi = { kind = "power", nu = 3.0 }\n'
                   'format = "json"\noutput = "out.json"\n', "out.json"),
    "enumerate": ('curve = { name = "parabola" }\npsi = { kind = "power", nu = 3.0 }\nQ0 = 1\nQ1 = 40\n'
                  'output = "out.csv"\n', "out.csv"),
    "count": ('curve = { name = "parabola" }\nphi = "dual"\ngamma = [-6.0, 6.0]\nj = [2, 3, 4, 5]\n'
              'k = [2, 3]\nlam = 0.5\noutput = "out.csv"\n', "out.csv"),
    "sum": ('curve = { name = "parabola" }\npsi = { kind = "power", nu = 3.0 }\nmode = "ledger"\n'
            's = [0.6, 0.9]\nkmin = 0\nkmax = 5\nformat = "json"\noutput = "out.json"\n', "out.json"),
    "cover": ('curve = { name = "circle_arc", a = -0.5, b = 0.5 }\npsi = { kind = "power", nu = 3.0 }\n'
              'Q0 = 8\nQ1 = 31\ns = [0.5, 0.75, 1.0]\noutput = "out.csv"\n', "out.csv"),
    "dimscan": ('curve = { name = "parabola" }\nnu = 5.0\ns_grid = [0.45, 0.65, 0.85]\nk_grid = [2, 3, 4, 5]\n'
                'output = "out.csv"\n', "out.csv"),
}


def test_10_cli_determinism(report, tmp_path):
    same, codes = {}, {}
    for cmd, (text, out) in CLI_CASES.items():
        blobs = []
        for run in ("a", "b"):
            d = tmp_path / f"{cmd}-{run}"
            d.mkdir()
            (d / "run.toml").write_text(text)
            codes[cmd, run] = main([cmd, str(d / "run.toml")])
            blobs.append((d / out).read_bytes())
        same[cmd] = blobs[0] == blobs[1] and len(blobs[0]) > 0
    ok = all(same.values()) and set(codes.values()) == {0}
    report(10, "CLI determinism", ok,
           ", ".join(f"{c} {'identical' if v else 'DIFFERENT'}" for c, v in same.items()))
    assert ok
