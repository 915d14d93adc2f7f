from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dualapprox import (
    ApproxFunction,
    BudgetExceeded,
    DualTriple,
    PreconditionError,
    builtin_curve,
    classify,
    curve_from_evaluators,
    enumerate_arrays,
    enumerate_nonempty,
    extend,
    make_triple,
    mu_measure,
    nearest_int_norm,
    p_zero,
    solve_mu,
    theoretical_bound,
)
from dualapprox.approx import CASES, P0_LARGE, P0_SMALL, P_NOT_P0, THETA1, THETA2, bound_constants

PSI01 = ApproxFunction.constant(0.01)


def quadratic_oracle(q1, q2, p, eps, a=0.0, b=1.0):
    """Length of {x in [a,b] : |q2 x^2 + q1 x - p| < eps}, by explicit roots."""

    def below(c):
        # {x : q2 x^2 + q1 x - c < 0} as a list of intervals
        A, B, Cc = q2, q1, -c
        if A == 0:
            if B == 0:
                return [(-math.inf, math.inf)] if Cc < 0 else []
            r = -Cc / B
            return [(-math.inf, r)] if B > 0 else [(r, math.inf)]
        disc = B * B - 4 * A * Cc
        if disc <= 0:
            return [] if A > 0 else [(-math.inf, math.inf)]
        sq = math.sqrt(disc)
        qq = -0.5 * (B + math.copysign(sq, B))
        r1, r2 = sorted((qq / A, Cc / qq) if qq != 0 else (-sq / (2 * A), sq / (2 * A)))
        return [(r1, r2)] if A > 0 else [(-math.inf, r1), (r2, math.inf)]

    def clip(iv):
        return [(max(a, lo), min(b, hi)) for lo, hi in iv if min(b, hi) > max(a, lo)]

    inside = clip(below(p + eps))
    outside = clip(below(p - eps))
    total = sum(hi - lo for lo, hi in inside)
    return total - sum(hi - lo for lo, hi in outside)


def test_nearest_int_norm_examples():
    assert nearest_int_norm(2.3) == pytest.approx(0.3)
    assert nearest_int_norm(-0.5) == 0.5
    assert nearest_int_norm(7.0) == 0.0


def test_classify_examples(parabola):
    k = parabola.base.constants()
    assert classify(7, 1, k) == THETA1
    assert classify(1, 1, k) == THETA2
    assert classify(0, 3, k) == THETA2
    with pytest.raises(PreconditionError):
        classify(0, 0, k)


def test_p_zero_examples(parabola, exponential):
    assert p_zero(parabola, -1, 1) == 0
    assert p_zero(parabola, 3, 2) == -1
    assert p_zero(parabola, 0, 1) == 0
    # F(x0) = 1/2 exactly for (q1, q2) = (2, -2): p0 = 0 by the half-open rule
    assert p_zero(parabola, 2, -2) == 0
    fx0 = float(exponential.F(1, -1, exponential.critical_point(1, -1)))
    assert -0.5 < fx0 - p_zero(exponential, 1, -1) <= 0.5


def test_solve_mu_examples(parabola):
    a = solve_mu(parabola, PSI01, 0, 1, 0)
    assert a.parts == ((0.0, pytest.approx(0.1, abs=1e-15)),)
    assert mu_measure(a) == pytest.approx(0.1, rel=1e-14)
    b = solve_mu(parabola, PSI01, -1, 1, 0)
    assert len(b) == 2
    lo, hi = (1 - math.sqrt(0.96)) / 2, (1 + math.sqrt(0.96)) / 2
    assert b.parts[0] == (0.0, pytest.approx(lo, abs=1e-14))
    assert b.parts[1] == (pytest.approx(hi, abs=1e-14), 1.0)
    assert mu_measure(b) == pytest.approx(0.020204, abs=1e-6)
    c = solve_mu(parabola, PSI01, 1, 1, 5)
    assert c.empty and mu_measure(c) == 0.0


def test_solve_mu_residuals(exponential):
    psi = ApproxFunction.power(3)
    for q1, q2, p in [(3, -2, -3), (-5, 2, 1), (40, 1, 21), (0, 7, 12)]:
        mu = solve_mu(exponential, psi, q1, q2, p)
        ps = psi(max(abs(q1), abs(q2)))
        for lo, hi in mu.parts:
            for x in (lo, hi):
                if x in (0.0, 1.0):
                    continue
                r = abs(float(exponential.F(q1, q2, x)) - p) - ps
                assert abs(r) <= 1e-12 * (1 + abs(p))


@given(st.integers(-60, 60), st.integers(-60, 60), st.integers(-200, 200), st.floats(1e-6, 0.3))
def test_mu_length_matches_quadratic_oracle(parabola, q1, q2, p, eps):
    if q1 == 0 and q2 == 0:
        return
    psi = ApproxFunction.constant(eps)
    got = solve_mu(parabola, psi, q1, q2, p)
    ref = quadratic_oracle(q1, q2, p, eps)
    assert got.total_length == pytest.approx(ref, abs=1e-12 * (1 + abs(p)))


def _grid_check(ext, psi, q1, q2, p, x):
    mu = solve_mu(ext, psi, q1, q2, p)
    q = max(abs(q1), abs(q2))
    val = np.abs(np.asarray(ext.F(q1, q2, x)) - p)
    direct = val < psi(q)
    member = mu.contains(x)
    near = np.zeros_like(direct)
    for lo, hi in mu.parts:
        near |= (np.abs(x - lo) < 1e-9) | (np.abs(x - hi) < 1e-9)
    near |= np.abs(val - psi(q)) < 1e-9 * (1 + abs(p))
    return int(np.sum((direct != member) & ~near))


@pytest.mark.parametrize("fixture", ["parabola", "exponential"])
def test_grid_membership_small_sample(fixture, request):
    ext = request.getfixturevalue(fixture)
    rng = np.random.default_rng(1)
    x = np.linspace(ext.base.a, ext.base.b, 20001)
    psi = ApproxFunction.power(1.5)
    bad = 0
    for _ in range(60):
        q1, q2 = rng.integers(-30, 31, size=2)
        if q1 == 0 and q2 == 0:
            continue
        F = np.asarray(ext.F(int(q1), int(q2), x))
        p = int(rng.integers(math.floor(F.min()) - 1, math.ceil(F.max()) + 2))
        bad += _grid_check(ext, psi, int(q1), int(q2), p, x)
    assert bad == 0


def test_psi_monotonicity(parabola):
    small, big = ApproxFunction.constant(0.01), ApproxFunction.constant(0.05)
    for q1, q2, p in [(-1, 1, 0), (3, -4, -1), (0, 5, 2), (9, 1, 5)]:
        a, b = solve_mu(parabola, small, q1, q2, p), solve_mu(parabola, big, q1, q2, p)
        for lo, hi in a.parts:
            assert b.contains(np.array([lo, hi, 0.5 * (lo + hi)])).all()
        assert a.total_length <= b.total_length


def test_parts_disjoint_ordered_inside_I(exponential):
    psi = ApproxFunction.power(2)
    for t, mu in enumerate_nonempty(exponential, psi, 1, 12):
        flat = [v for part in mu.parts for v in part]
        assert flat == sorted(flat)
        assert 0.0 <= flat[0] and flat[-1] <= 1.0
        assert mu.total_length == pytest.approx(sum(h - l for l, h in mu.parts), abs=1e-15)


def test_enumeration_examples(parabola):
    got = {(t.q1, t.q2, t.p): mu for t, mu in enumerate_nonempty(parabola, PSI01, 1, 1)}
    assert got[0, 1, 0].parts[0] == (0.0, pytest.approx(0.1))
    assert len(got[-1, 1, 0]) == 2
    tiny = ApproxFunction.constant(1e-9)
    for ext in (parabola, extend(builtin_curve("exponential"))):
        for _, mu in enumerate_nonempty(ext, tiny, 1, 1):
            assert all(h - l < 1e-4 for l, h in mu.parts)


def test_enumeration_order_and_uniqueness(parabola):
    b = enumerate_arrays(parabola, ApproxFunction.power(2), 1, 20)
    keys = list(zip(b.q, b.q1, b.q2, b.p))
    assert keys == sorted(keys)
    assert len(set(keys)) == len(keys)
    assert np.all(b.q == np.maximum(np.abs(b.q1), np.abs(b.q2)))
    assert np.all(np.abs(b.p) <= parabola.base.C * b.q)


def _brute_force_triples(ext, psi, Q):
    """Every (q1, q2, p) whose set meets a fine grid of I, plus grid-invisible ones via the solver."""
    x = np.linspace(ext.base.a, ext.base.b, 4001)
    out = set()
    for q in range(1, Q + 1):
        for q1 in range(-q, q + 1):
            for q2 in range(-q, q + 1):
                if max(abs(q1), abs(q2)) != q:
                    continue
                F = np.asarray(ext.F(q1, q2, x))
                for p in range(-int(ext.base.C * q) - 1, int(ext.base.C * q) + 2):
                    if np.any(np.abs(F - p) < psi(q)) or not solve_mu(ext, psi, q1, q2, p).empty:
                        out.add((q1, q2, p))
    return out


@pytest.mark.parametrize("fixture", ["parabola", "exponential", "circle"])
def test_enumeration_complete(fixture, request):
    ext = request.getfixturevalue(fixture)
    psi = ApproxFunction.power(1)
    b = enumerate_arrays(ext, psi, 1, 6)
    got = set(zip(b.q1.tolist(), b.q2.tolist(), b.p.tolist()))
    assert got == _brute_force_triples(ext, psi, 6)


@pytest.mark.parametrize("fixture", ["parabola", "exponential", "circle"])
def test_kernel_matches_reference_solver(fixture, request):
    ext = request.getfixturevalue(fixture)
    psi = ApproxFunction.power(3)
    constants = ext.base.constants(psi)
    b = enumerate_arrays(ext, psi, 1, 25)
    rng = np.random.default_rng(7)
    for i in rng.choice(len(b), size=400, replace=False):
        t = b.triple(i)
        ref = solve_mu(ext, psi, t.q1, t.q2, t.p)
        got = b.interval_set(i)
        assert len(ref) == len(got)
        for (l0, h0), (l1, h1) in zip(ref.parts, got.parts):
            assert l1 == pytest.approx(l0, abs=1e-11) and h1 == pytest.approx(h0, abs=1e-11)
        assert got.total_length == pytest.approx(ref.total_length, rel=1e-7, abs=1e-15)
        full = make_triple(ext, psi, constants, t.q1, t.q2, t.p)
        assert full.case == t.case and (full.p0 == t.p0 or t.case == THETA1)


def test_user_curve_matches_builtin(parabola):
    user = extend(curve_from_evaluators(lambda x: np.asarray(x) ** 2, lambda x: 2 * np.asarray(x),
                                        lambda x: np.full(np.shape(x), 2.0), (0.0, 1.0)))
    a = enumerate_arrays(parabola, PSI01, 1, 3)
    b = enumerate_arrays(user, PSI01, 1, 3)
    assert np.array_equal(a.q1, b.q1) and np.array_equal(a.p, b.p)
    np.testing.assert_allclose(a.length, b.length, atol=1e-15)


def test_budget(parabola):
    with pytest.raises(BudgetExceeded):
        enumerate_arrays(parabola, PSI01, 1, 50, budget=1000)


def test_degenerate_pair_rejected(parabola):
    with pytest.raises(PreconditionError):
        solve_mu(parabola, PSI01, 0, 0, 0)


# envelopes ------------------------------------------------------------------


def test_bound_constants_parabola():
    K = bound_constants(2.0, 2.0)
    assert K[THETA1] == 4.0
    assert K[P_NOT_P0] == pytest.approx(2 * math.sqrt(3))
    assert K[P0_SMALL] == pytest.approx(2 * math.sqrt(2))
    assert K[P0_LARGE] == pytest.approx(2 * math.sqrt(2))


def test_bound_examples(parabola):
    k = parabola.base.constants(PSI01)
    t = make_triple(parabola, PSI01, k, 7, 1, 3)
    assert t.case == THETA1
    assert theoretical_bound(t, PSI01, k) == pytest.approx(4 * 0.01 / 7)
    t = make_triple(parabola, PSI01, k, 0, 1, 0)
    assert t.case == P0_SMALL
    assert theoretical_bound(t, PSI01, k) == pytest.approx(2 * math.sqrt(2) * 0.1)
    assert theoretical_bound(t, PSI01, k) >= 0.1
    t = make_triple(parabola, PSI01, k, -1, 1, 0)
    assert t.case == P0_LARGE and t.norm == 0.25
    assert theoretical_bound(t, PSI01, k) == pytest.approx(2 * math.sqrt(2) * 0.01 / 0.5)
    assert theoretical_bound(t, PSI01, k) >= 0.020204


def test_halved_theta1_constant_is_too_small(parabola):
    # F = 7x - x^2 has |F'| between 5 and 7 on [0, 1]; the set has length about 2 psi / 5
    mu = solve_mu(parabola, PSI01, 7, -1, 5)
    assert mu.total_length > 2 * 0.01 / 7
    k = parabola.base.constants(PSI01)
    assert mu.total_length <= theoretical_bound(make_triple(parabola, PSI01, k, 7, -1, 5), PSI01, k)


def test_bound_preconditions(parabola):
    psi = ApproxFunction.power(1)
    k = parabola.base.constants(psi)
    t = make_triple(parabola, psi, k, 1, 3, 2)
    assert t.case == P_NOT_P0 and t.q < k.q0
    with pytest.raises(PreconditionError):
        theoretical_bound(t, psi, k)
    with pytest.raises(PreconditionError):
        theoretical_bound(DualTriple(1, 1, 0, 1, THETA1), psi, k)


@pytest.mark.parametrize("fixture", ["parabola", "exponential", "circle"])
def test_envelopes_dominate(fixture, request):
    ext = request.getfixturevalue(fixture)
    psi = ApproxFunction.power(3)
    k = ext.base.constants(psi)
    b = enumerate_arrays(ext, psi, k.q0, 14)
    pairs = {}
    for i in range(len(b)):
        t = b.triple(i)
        if (t.q1, t.q2) not in pairs:
            pairs[t.q1, t.q2] = make_triple(ext, psi, k, t.q1, t.q2, t.p0 if t.p0 is not None else 0)
        ref = pairs[t.q1, t.q2]
        full = DualTriple(t.q1, t.q2, t.p, t.q, t.case, ref.p0, ref.norm)
        assert b.length[i] <= theoretical_bound(full, psi, k)
    assert len(b) > 5000


@pytest.mark.parametrize("fixture", ["parabola", "exponential", "circle"])
def test_compiled_envelope_check(fixture, request):
    from dualapprox import cover_sum_by_case

    ext = request.getfixturevalue(fixture)
    led = cover_sum_by_case(ext, ApproxFunction.power(3), 0.8, 1, 5)
    for blk in led.blocks:
        assert sum(blk.violations.values()) == 0
        assert max(blk.max_ratio.values()) < 1.0


def test_partition_is_exhaustive(parabola):
    k = parabola.base.constants(PSI01)
    for q1 in range(-20, 21):
        for q2 in range(-20, 21):
            if q1 or q2:
                assert classify(q1, q2, k) in (THETA1, THETA2)
                if classify(q1, q2, k) == THETA2:
                    assert abs(q1 / q2) <= 2 * k.M


def test_p_completeness(exponential):
    psi = ApproxFunction.constant(0.125)
    C = exponential.base.C
    x = np.linspace(0, 1, 501)
    for q1 in range(-5, 6):
        for q2 in range(-5, 6):
            q = max(abs(q1), abs(q2))
            if q == 0:
                continue
            for p in (math.floor(C * q) + 1, -math.floor(C * q) - 1):
                assert np.all(np.abs(exponential.F(q1, q2, x) - p) >= 1)
                assert solve_mu(exponential, psi, q1, q2, p).empty


def test_case_labels():
    assert CASES == ("Theta1", "Theta2_pNotP0", "Theta2_P0_smallNorm", "Theta2_P0_largeNorm")
