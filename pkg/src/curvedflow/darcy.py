"""Gap averaging and Darcy-law mobilities.

Mobilities M are reported for V_bar = -M (grad p), with (grad p)_3 the
physical component (1/E3) dp/dx3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import simpson

from . import expr as ex
from .metric import MetricError, MetricSpec, k1_expression

F_SERIES_BELOW = 0.1
S_SERIES_BELOW = 1e-3
RESONANCE = 1e-10

PSEUDOSPHERE_FRAME = (
    "(grad p)_tau = (1/E3) dp/dtau with E3 = r taken on the inner wall r = a; "
    "the dimensionless factor F(1,2;4;-b/a)/12 does not depend on this choice"
)
CONFORMAL_FRAME = "(grad p)_3 = (1/f(x3)) dp/dx3 with f frozen at the given x3"


@dataclass(frozen=True)
class DarcyMobility:
    law: str
    value: float
    dimensionless: float
    a: float
    b: float
    eta: float
    frame_note: str
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "law": self.law,
            "value": self.value,
            "dimensionless": self.dimensionless,
            "a": self.a,
            "b": self.b,
            "eta": self.eta,
            "frame_note": self.frame_note,
            "extra": dict(self.extra),
        }


def average_along_gap(h: Callable, m: MetricSpec, x3: float, a: float, b: float, nodes: int = 129) -> float:
    """Arc-length average of h(x1, x3) across the gap at fixed x3.

    Computes (int h |E1| dx1) / (int |E1| dx1) over [a, a + b] by
    composite Simpson; for constant E1 this is (1/b) int h dx1.
    """
    if nodes < 3 or nodes % 2 == 0:
        raise ValueError("nodes must be odd and at least 3")
    x1 = np.linspace(a, a + b, nodes)
    x3v = np.full_like(x1, x3)
    E1 = np.abs(m.coefficients(x1, x3v)[0])
    if np.any(E1 == 0):
        raise MetricError("E1 vanishes on the averaging path")
    hv = np.broadcast_to(np.asarray(h(x1, x3v), dtype=float), x1.shape)
    return float(simpson(hv * E1, x=x1) / simpson(E1, x=x1))


# --------------------------------------------------------------------------
# pseudo-spheres


def hypergeometric_F124(z: float) -> float:
    """Gauss 2F1(1, 2; 4; z) for z <= 0.

    Closed form (6/x^3)(x + x^2/2 - (1+x) ln(1+x)) with x = -z, replaced by
    the series sum 6 z^n / ((n+2)(n+3)) near zero where the closed form
    cancels catastrophically.
    """
    if z > 0:
        raise ValueError("F(1,2;4;z) is only provided for z <= 0")
    x = -z
    if x >= F_SERIES_BELOW:
        return 6.0 / x**3 * (x + 0.5 * x * x - (1 + x) * math.log1p(x))
    total, term, n = 0.0, 1.0, 0  # term = (2)_n / (4)_n * z^n
    while True:
        total += term
        term *= z * (n + 2) / (n + 4)
        n += 1
        if abs(term) < 1e-14 * abs(total):
            return total


def pseudosphere_mobility(a: float, b: float, eta: float = 1.0) -> DarcyMobility:
    if not (a > 0 and b > 0 and eta > 0):
        raise ValueError("pseudo-sphere radii and viscosity must be positive")
    F = hypergeometric_F124(-b / a)
    return DarcyMobility(
        "pseudosphere", b * b * F / (12 * eta), F / 12, a, b, eta, PSEUDOSPHERE_FRAME, {"F": F, "ratio_b_over_a": b / a}
    )


# --------------------------------------------------------------------------
# conformal planes


def mobility_series(u: float, n_terms: int) -> float:
    """Truncated series ratio for the conformal mobility factor.

    numerator   sum_{k=0..n} (1/(2k+3)! - 2/(2k+4)!) u^(2k)
    denominator 1 + sum_{k=1..n} 2 u^(2k) / (2k+2)!
    """
    if n_terms < 1:
        raise ValueError("n_terms must be at least 1")
    return _series(u * u, n_terms)


def _series(u2: float, n: int) -> float:
    # u2 may be negative: the trigonometric branch is the series at u = i v
    num = sum((1 / math.factorial(2 * k + 3) - 2 / math.factorial(2 * k + 4)) * u2**k for k in range(n + 1))
    den = 1 + sum(2 * u2**k / math.factorial(2 * k + 2) for k in range(1, n + 1))
    return num / den


def mobility_factor(u: float) -> float:
    """S(u) = (coth(u/2)/u - 2/u^2) / 2, the hyperbolic-branch factor (S(0) = 1/12)."""
    u = abs(u)
    if u < S_SERIES_BELOW:
        return _series(u * u, 8)
    return 0.5 * (1 / (math.tanh(0.5 * u) * u) - 2 / (u * u))


def mobility_factor_trig(v: float) -> float:
    """(2/v^2 - cot(v/2)/v) / 2, the trigonometric continuation of S."""
    v = abs(v)
    if v < S_SERIES_BELOW:
        return _series(-v * v, 8)
    m = round(v / (2 * math.pi))
    if m > 0 and abs(v - 2 * math.pi * m) < RESONANCE:
        raise ValueError(f"resonant gap: omega b = {v} is a multiple of 2 pi")
    return 0.5 * (2 / (v * v) - math.cos(0.5 * v) / (math.sin(0.5 * v) * v))


def conformal_mobility(f, b: float, x3: float, eta: float = 1.0, params=None) -> DarcyMobility:
    """Darcy mobility between the planes x1 = 0 and x1 = b with conformal factor f(x3).

    alpha^2 = -k1 is evaluated at ``x3`` (frozen-coefficient law). When k1
    is positive there the trigonometric continuation is returned and flagged.
    """
    if not (b > 0 and eta > 0):
        raise ValueError("gap width and viscosity must be positive")
    params = dict(params or {})
    f = ex.as_expression(f, {"x3", *params})
    env = {"x3": float(x3), **params}
    fv = ex.evaluate(f, env)
    if not fv > 0:
        raise ex.ExprDomainError("conformal factor must be positive", f)
    k1 = ex.evaluate(k1_expression(f), env)
    if k1 <= 0:
        alpha = math.sqrt(-k1)
        S = mobility_factor(alpha * b)
        branch = "hyperbolic" if k1 < 0 else "flat"
    else:
        alpha = math.sqrt(k1)
        S = mobility_factor_trig(alpha * b)
        branch = "trigonometric"
    extra = {
        "x3": float(x3),
        "f": fv,
        "k1": k1,
        "alpha": alpha,
        "u": alpha * b,
        "branch": branch,
        "continuation": branch == "trigonometric",
    }
    return DarcyMobility("conformal", b * b * fv * fv * S / eta, S, 0.0, b, eta, CONFORMAL_FRAME, extra)
