"""Metric Diophantine approximation experiments for dual forms on planar curves."""
from __future__ import annotations

from . import _jit  # noqa: F401
from .approx import (
    CASES,
    DualTriple,
    IntervalSet,
    bound_constants,
    classify,
    enumerate_arrays,
    enumerate_nonempty,
    make_triple,
    mu_measure,
    nearest_int_norm,
    p_zero,
    solve_mu,
    theoretical_bound,
)
from .counting import CountQuery, CountRecord, RationalPoly, count_near, dyadic_scan, fit_exponents, weighted_sum
from .curves import (
    CurveConstants,
    ExtendedCurve,
    F_eval,
    PlanarCurve,
    band_ratio,
    builtin_curve,
    critical_point,
    curve_from_evaluators,
    dual_eval,
    extend,
    slope_inverse,
    taylor_gap,
)
from .errors import BudgetExceeded, CurveError, DualApproxError, PreconditionError, RootBracketError
from .hausdorff import CoverEstimate, build_tail_cover, dimension_scan, hs_cost, refine_cover
from .ledger import (
    BlockLedger,
    cover_sum_by_case,
    cover_sums,
    critical_exponent,
    envelope_check,
    psi_hat,
    series_partial,
    tail_decay_report,
)
from .psi import ApproxFunction

__version__ = "0.1.0"
