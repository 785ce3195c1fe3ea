import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stiffchemo.model import (
    TABLE1,
    TABLE1_CLASSIFICATION,
    ModelParams,
    ResponseFunction,
    growth_P,
    params_from_table1,
    response_F,
    stiffness_ratio,
    tumbling_kernel_K,
)

chis = st.floats(0.0, 0.99)
deltas = st.floats(1e-3, 10.0)


def test_response_limits():
    rf = ResponseFunction(0.5, 0.1)
    assert response_F(0.0, rf) == 0.0
    assert response_F(1e6, rf) == pytest.approx(0.5)
    assert response_F(-1e6, rf) == pytest.approx(-0.5)
    assert rf.slope_at_zero == pytest.approx(5.0)


@given(chis, deltas, st.floats(-1e3, 1e3))
def test_response_odd_and_bounded(chi, delta, x):
    rf = ResponseFunction(chi, delta)
    assert response_F(-x, rf) == -response_F(x, rf)
    assert abs(response_F(x, rf)) <= chi
    K = tumbling_kernel_K(x, rf)
    assert 1 - chi - 1e-15 <= K <= 1 + chi + 1e-15


def test_response_slope_by_finite_difference():
    rf = ResponseFunction(0.3, 0.05)
    h = 1e-7
    fd = (response_F(h, rf) - response_F(-h, rf)) / (2 * h)
    assert fd == pytest.approx(rf.slope_at_zero, rel=1e-8)


@pytest.mark.parametrize("chi,delta", [(1.0, 0.1), (-0.1, 0.1), (0.5, 0.0), (0.5, -1.0)])
def test_response_rejects_bad_parameters(chi, delta):
    with pytest.raises(ValueError):
        ResponseFunction(chi, delta)


@pytest.mark.parametrize("kw", [dict(k=0.0), dict(k=-1.0), dict(d=-0.1), dict(chi=1.2)])
def test_params_validation(kw):
    base = dict(k=1.0, d=1.0, chi=0.5, delta=0.1)
    base.update(kw)
    with pytest.raises(ValueError):
        ModelParams(**base)


def test_growth_P():
    assert growth_P(1.0) == 0.0
    assert growth_P(0.25) == 0.75
    np.testing.assert_array_equal(growth_P(np.array([0.0, 2.0])), [1.0, -1.0])


@given(st.floats(0.01, 10), st.floats(0.01, 10), st.floats(0.01, 0.99), st.floats(0.01, 1))
def test_table1_triple_roundtrip(k, dk, chi_r, sd):
    chi_r = chi_r / math.sqrt(max(k, 1.0))  # keeps chi < 1
    p = params_from_table1(dk, chi_r, sd, k=k)
    np.testing.assert_allclose(p.table1(), (dk, chi_r, sd), rtol=1e-12)


def test_stiffness_ratio_set_B_is_eight():
    # (chi/sqrt k) / (sqrt k delta) = 0.5 / 0.0625 for every k
    for k in (0.1, 1.0):
        assert stiffness_ratio(params_from_table1(*TABLE1["B"], k=k)) == pytest.approx(8.0)


def test_table1_entries():
    assert len(TABLE1_CLASSIFICATION) == 7
    assert TABLE1["C"] == (0.7, 0.5, 0.0625)
    assert stiffness_ratio(params_from_table1(*TABLE1["A"], k=2.0)) == pytest.approx(10.0)
