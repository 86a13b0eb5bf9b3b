import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import hyp2f1

from curvedflow.darcy import (
    average_along_gap,
    conformal_mobility,
    hypergeometric_F124,
    mobility_factor,
    mobility_factor_trig,
    mobility_series,
    pseudosphere_mobility,
)
from curvedflow.metric import preset
from curvedflow.profiles import conformal_profile

# frozen from mpmath at 30 digits
S_ONE = 0.081976706869326424385
S_TEN = 0.040004540199100960


def _S_mp(u):
    with mpmath.workdps(50):
        u = mpmath.mpf(u)
        return float((mpmath.coth(u / 2) / u - 2 / u**2) / 2)


@settings(max_examples=100, deadline=None)
@given(st.floats(-20, -1e-6))
def test_F124_matches_scipy(z):
    assert hypergeometric_F124(z) == pytest.approx(hyp2f1(1, 2, 4, z), rel=1e-12)


def test_F124_values():
    assert hypergeometric_F124(-1.0) == pytest.approx(9 - 12 * math.log(2), rel=1e-14)
    assert hypergeometric_F124(0.0) == 1.0
    with pytest.raises(ValueError):
        hypergeometric_F124(0.5)


def test_mobility_factor_values():
    assert mobility_factor(1.0) == pytest.approx(S_ONE, rel=1e-14)
    assert mobility_factor(10.0) == pytest.approx(S_TEN, rel=1e-14)
    assert mobility_factor(0.0) == pytest.approx(1 / 12)


@pytest.mark.parametrize("u", [1e-8, 1e-4, 9.9e-4, 1.1e-3, 0.05, 3.0, 30.0])
def test_mobility_factor_against_mpmath(u):
    assert mobility_factor(u) == pytest.approx(_S_mp(u), rel=5e-9)


def test_series_truncation():
    assert mobility_series(1.0, 1) == pytest.approx(0.08205128205128205, rel=1e-14)
    with pytest.raises(ValueError):
        mobility_series(1.0, 0)


def test_trig_factor_is_continuation():
    for v in (0.01, 0.5, 2.0):
        with mpmath.workdps(50):
            expected = float(mpmath.re((mpmath.coth(1j * v / 2) / (1j * v) - 2 / (1j * v) ** 2) / 2))
        assert mobility_factor_trig(v) == pytest.approx(expected, rel=1e-10)
    with pytest.raises(ValueError):
        mobility_factor_trig(2 * math.pi)


def test_pseudosphere_values():
    m = pseudosphere_mobility(1.0, 1.0)
    assert m.value == pytest.approx(0.056852819440054714, rel=1e-14)
    assert pseudosphere_mobility(2.0, 1.0).value == pytest.approx(0.06720935135101369, rel=1e-14)
    with pytest.raises(ValueError):
        pseudosphere_mobility(0.0, 1.0)


def test_conformal_mobility_cases():
    assert conformal_mobility("1", 1.0, 0.0).value == pytest.approx(1 / 12, abs=1e-15)
    m = conformal_mobility("1/(1+x3)", 0.5, 0.0)
    assert m.extra["k1"] == pytest.approx(-4.0)
    assert m.value == pytest.approx(0.25 * S_ONE, rel=1e-13)
    t = conformal_mobility("cos(x3)^(-1/3)", 1.0, 0.0)
    assert t.extra["branch"] == "trigonometric" and t.extra["continuation"]


def test_gap_average_of_conformal_profile():
    # mean of g over [0, 1] for k1 = -1, k2 = 1: -(1 + 2(1 - cosh 1)/sinh 1)
    m = preset("conformal", {"k1": -1.0})
    p = conformal_profile(1.0, -1.0, 1.0)
    avg = average_along_gap(lambda x1, x3: p(x1), m, 0.5, 0.0, 1.0)
    assert avg == pytest.approx(-0.07576568547998053, rel=1e-9)
    with pytest.raises(ValueError):
        average_along_gap(lambda x1, x3: x1, m, 0.5, 0.0, 1.0, nodes=4)
