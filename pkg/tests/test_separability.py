import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curvedflow.metric import preset
from curvedflow.separability import Existence, check_flow_existence, test_separable as separable

DOMAIN = ((0.5, 1.5), (0.5, 1.5))
FACTORS = [np.exp, np.cosh, lambda x: 1 + x**2, lambda x: 2 + np.sin(3 * x), np.sqrt, lambda x: x ** -1.5]


@settings(max_examples=50, deadline=None)
@given(st.integers(0, len(FACTORS) - 1), st.integers(0, len(FACTORS) - 1), st.floats(0.1, 10))
def test_products_are_separable(i, j, c):
    rep = separable(lambda x1, x3: c * FACTORS[i](x1) * FACTORS[j](x3), DOMAIN)
    assert rep.verdict and rep.residual <= 1e-10


@settings(max_examples=50, deadline=None)
@given(st.floats(0.05, 5))
def test_sums_are_not_separable(c):
    rep = separable(lambda x1, x3: x1 + c * x3, DOMAIN)
    assert not rep.verdict and rep.residual > 1e-4


def test_witness_reconstructs():
    h = lambda x1, x3: np.exp(x1) * (1 + x3**2)
    rep = separable(h, DOMAIN)
    H = h(rep.x1[:, None], rep.x3[None, :])
    np.testing.assert_allclose(np.outer(rep.witness_u, rep.witness_v), H, rtol=1e-13)


def test_zero_function_and_small_grid():
    assert separable(lambda x1, x3: 0 * x1 * x3, DOMAIN).verdict
    with pytest.raises(ValueError):
        separable(lambda x1, x3: x1 * x3, DOMAIN, n1=3)


def test_sampled_path_for_large_grids():
    rep = separable(lambda x1, x3: np.exp(x1 - x3), DOMAIN, n1=200, n3=200)
    assert rep.verdict
    rep = separable(lambda x1, x3: np.exp(x1 * x3), DOMAIN, n1=200, n3=200)
    assert not rep.verdict


@pytest.mark.parametrize(
    "name, params, status",
    [
        ("cartesian", None, Existence.EXISTS_CONSTRUCTIVE),
        ("cylindrical_zflow", None, Existence.EXISTS_CONSTRUCTIVE),
        ("cylindrical_radial", None, Existence.EXISTS_CONSTRUCTIVE),
        ("cylindrical_azimuthal", None, Existence.EXISTS_CONSTRUCTIVE),
        ("spherical_polar", None, Existence.EXISTS_CONSTRUCTIVE),
        ("minkowski_pseudosphere", None, Existence.EXISTS_CONSTRUCTIVE),
        ("conical", {"alpha": math.pi / 4}, Existence.NOT_EXISTS),
        ("toroidal", {"a": 1.0}, Existence.NOT_EXISTS),
        ("conformal", {"f": "1/(1+x3)"}, Existence.NOT_EXISTS),
        ("conformal", {"f": "(1+x3)^(-1/3)"}, Existence.EXISTS_CONSTRUCTIVE),
        ("conformal", {"k1": -1.0}, Existence.EXISTS_CONSTRUCTIVE),
    ],
)
def test_existence_catalog(name, params, status):
    assert check_flow_existence(preset(name, params)).status is status


def test_inconclusive_when_e1_varies_without_conformal_structure():
    from curvedflow.metric import MetricSpec

    # E1 depends on x3, E3/(E1^3 E2) separable, not conformal
    m = MetricSpec("warped", "1+x3", "(1+x3)^3", "x1", ((1, 2), (0, 1)))
    v = check_flow_existence(m)
    assert v.status is Existence.NECESSARY_PASSED_INCONCLUSIVE
    assert v.e1_depends_on_x3
