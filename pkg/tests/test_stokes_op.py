import math

import numpy as np
import pytest
import sympy as sp

from curvedflow.metric import preset
from curvedflow.profiles import conformal_profile, minkowski_profile, quadrature_profile
from curvedflow.stokes_op import (
    StepError,
    extract_coefficients,
    maineq_residual,
    reconstruct_pressure,
    x3_independence,
)

x1, x3 = sp.symbols("x1 x3", positive=True)
g = sp.Function("g")


def sympy_alphas(E1, E2, E3, at, sign=1):
    """Symbolic oracle: coefficients of g, g', g'', g''' in the existence operator."""
    P, Q, R = E3 / (E1 * E2), E2 / (E1 * E3), E1 / (E2 * E3)
    S = Q * sp.diff(g(x1) * P, x1)
    N = sp.diff(P * sp.diff(S, x1), x1) - sign * sp.diff(R * sp.diff(S, x3), x3)
    N = sp.expand(N)
    out = []
    for k in range(3, -1, -1):
        d = sp.Derivative(g(x1), (x1, k)) if k else g(x1)
        c = N.coeff(d)
        N = sp.expand(N - c * d)
        out.append(float(c.subs({x1: at[0], x3: at[1]})))
    return out[::-1]


def _coefficients_at(m, point):
    c = extract_coefficients(m, grid=([point[0]], [point[1]]))
    return c.A[0, 0], c.B[0, 0], c.C[0, 0]


def test_cylindrical_oracle():
    a0, a1, a2, a3 = sympy_alphas(sp.Integer(1), x1, sp.Integer(1), (1.0, 0.5))
    expected = (-a2 / a3, -a1 / a3, -a0 / a3)
    assert expected == pytest.approx((2.0, -3.0, 3.0))
    got = _coefficients_at(preset("cylindrical_zflow"), (1.0, 0.5))
    assert got == pytest.approx(expected, rel=1e-6)


def test_spherical_oracle():
    a = sympy_alphas(sp.Integer(1), x1 * sp.sin(x3), x1, (1.3, 1.1))
    expected = (-a[2] / a[3], -a[1] / a[3], -a[0] / a[3])
    got = _coefficients_at(preset("spherical_polar"), (1.3, 1.1))
    assert got == pytest.approx(expected, rel=1e-6, abs=1e-6)


@pytest.mark.parametrize("sign, convention", [(1, "default"), (-1, "integrable")])
def test_conformal_conventions(sign, convention):
    f = sp.cosh(x3) ** sp.Rational(-1, 3)
    a = sympy_alphas(f, f, f, (0.5, 0.4), sign)
    m = preset("conformal", {"k1": -2 / 3})
    c = extract_coefficients(m, grid=([0.5], [0.4]), convention=convention)
    assert c.B[0, 0] == pytest.approx(-a[1] / a[3], rel=1e-6)
    # default form: g''' + k1 g' = 0, integrable form: g''' - k1 g' = 0
    assert c.B[0, 0] == pytest.approx(sign * 2 / 3, rel=1e-6)


def test_x3_independence_flags():
    assert x3_independence(extract_coefficients(preset("cylindrical_zflow")))
    assert not x3_independence(extract_coefficients(preset("conical", {"alpha": math.pi / 4})))


def test_step_too_large():
    with pytest.raises(StepError):
        extract_coefficients(preset("cartesian"), grid=([0.01], [0.5]), h=0.01)


def test_minkowski_residual_and_pressure():
    # dp/dtau = C / sinh(tau), so p = C ln tanh(tau/2) up to a constant
    m = preset("minkowski_pseudosphere")
    prof = minkowski_profile(1.0, 1.0, -2.0)
    assert maineq_residual(m, prof).sup_norm_richardson < 1e-6
    grid = (np.linspace(1.2, 1.8, 4), np.linspace(0.5, 1.5, 5))
    pf = reconstruct_pressure(m, prof, grid=grid)
    assert pf.compatibility_residual < 1e-5
    np.testing.assert_allclose(pf.dp_dx3, np.broadcast_to(-2.0 / np.sinh(pf.x3), pf.p.shape), rtol=1e-5)
    lt = lambda t: np.log(np.tanh(t / 2))
    expected = -2.0 * (lt(pf.x3) - lt(pf.basepoint[1]))
    np.testing.assert_allclose(pf.p, np.broadcast_to(expected, pf.p.shape), atol=1e-5)
    np.testing.assert_allclose(pf.dp_dx1, 0.0, atol=1e-5)


def test_quadrature_profile_residual_small():
    m = preset("cylindrical_zflow")
    prof = quadrature_profile(m, 1.0, 1.0, 1.0)
    assert maineq_residual(m, prof).sup_norm_richardson < 1e-6


def test_integrable_sign_gives_compatible_pressure():
    m = preset("conformal", {"k1": -2 / 3})
    grid = (np.linspace(0.3, 0.7, 5), np.linspace(0.2, 0.8, 5))
    # the profile solving g''' - k1 g' = 0 has a single-valued pressure
    good = conformal_profile(1.0, 2 / 3, 1.0, allow_trig=True)
    bad = conformal_profile(1.0, -2 / 3, 1.0)
    r = [reconstruct_pressure(m, good, grid=grid, h=h, nodes=33).compatibility_residual for h in (0.02, 0.01)]
    assert r[1] < 1e-5 and r[0] / r[1] == pytest.approx(4, rel=0.2)
    assert reconstruct_pressure(m, bad, grid=grid, h=0.01, nodes=33).compatibility_residual > 0.1
    assert maineq_residual(m, good, grid=grid, convention="integrable").sup_norm_richardson < 1e-8
    assert maineq_residual(m, bad, grid=grid, convention="default").sup_norm_richardson < 1e-8
