from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dualapprox import ApproxFunction, PreconditionError


def test_power_values():
    psi = ApproxFunction.power(3)
    assert psi(2) == 0.125
    np.testing.assert_allclose(psi(np.arange(1, 5)), np.arange(1, 5.0) ** -3)


def test_table_constant_tail_is_flagged(tmp_path):
    path = tmp_path / "psi.csv"
    path.write_text("q,value\n1,0.5\n2,0.25\n3,0.1\n")
    psi = ApproxFunction.from_csv(path)
    assert psi(3) == 0.1 and psi(50) == 0.1
    assert not psi.extrapolated(3) and psi.extrapolated(4)
    assert psi.q0 == 3


@pytest.mark.parametrize("bad", [[0.0], [-1.0], [0.1, 0.2], []])
def test_table_rejects_bad_values(bad):
    with pytest.raises(PreconditionError):
        ApproxFunction.table(bad)


def test_csv_heights_must_be_consecutive(tmp_path):
    path = tmp_path / "psi.csv"
    path.write_text("1,0.5\n3,0.25\n")
    with pytest.raises(PreconditionError):
        ApproxFunction.from_csv(path)


def test_nonpositive_height_rejected():
    with pytest.raises(PreconditionError):
        ApproxFunction.power(2)(0)


@given(st.floats(0.1, 12), st.floats(0.05, 1.0), st.floats(0.01, 1.0))
def test_truncated_is_monotone_and_dominates(nu, s, eps0):
    psi = ApproxFunction.power(nu)
    hat = psi.truncate(s, eps0)
    q = np.arange(1, 400)
    v = hat(q)
    assert np.all(np.diff(v) <= 0)
    assert np.all(v >= psi(q))
    assert np.all(v >= q ** (1 - (3 + eps0) / s) * (1 - 1e-15))


@given(st.floats(0.05, 8))
def test_q0_definition(nu):
    psi = ApproxFunction.power(nu)
    q0 = psi.q0
    assert psi(q0) <= 0.125
    assert q0 == 1 or psi(q0 - 1) > 0.125
