from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dualapprox.errors import RootBracketError
from dualapprox.rootfind import monotone_root, monotone_root_array


def test_cubic_root_matches_closed_form():
    x = monotone_root(lambda t: t**3, lambda t: 3 * t * t, 2.0, 0.0, 2.0)
    assert x == pytest.approx(2 ** (1 / 3), rel=1e-14)


def test_endpoint_roots():
    assert monotone_root(lambda t: t, lambda t: 1.0, 0.0, 0.0, 1.0) == 0.0
    assert monotone_root(lambda t: t, lambda t: 1.0, 1.0, 0.0, 1.0) == 1.0


def test_no_sign_change_raises():
    with pytest.raises(RootBracketError):
        monotone_root(lambda t: t, lambda t: 1.0, 5.0, 0.0, 1.0)


@given(st.floats(-20, 20), st.floats(0.1, 5.0))
def test_decreasing_function(c, k):
    target = -k * 0.3 + c
    x = monotone_root(lambda t: -k * t + c, lambda t: -k, target, -1.0, 1.0)
    assert x == pytest.approx(0.3, abs=1e-12)


def test_array_version_agrees_with_scalar():
    targets = np.linspace(1.0, math.e, 25)
    xs = monotone_root_array(np.exp, np.exp, targets, np.zeros(25), np.ones(25))
    ref = [monotone_root(math.exp, math.exp, t, 0.0, 1.0) for t in targets]
    np.testing.assert_allclose(xs, ref, rtol=1e-13, atol=1e-15)
    np.testing.assert_allclose(xs, np.log(targets), rtol=1e-13, atol=1e-15)
