"""The third-order existence operator for unidirectional Stokes flow.

With P = E3/(E1 E2), Q = E2/(E1 E3), R = E1/(E2 E3) and the profile g(x1),
let S = Q d/dx1 (g P). The two pressure-gradient components are

    dp/dx1 = -eta R dS/dx3,        dp/dx3 = eta P dS/dx1,

and a pressure exists when the operator

    N[g] = d/dx1 (P dS/dx1) - sign * d/dx3 (R dS/dx3)

vanishes. ``sign = +1`` (convention ``"default"``) is the commonly stated form of
the existence equation; ``sign = -1`` (convention ``"integrable"``) is the
exact mixed-partial compatibility of the two gradient components above.
The two agree whenever the metric does not depend on x3.

Metric-dependent parts are differentiated with nested second-order central
differences; the profile enters only through its exact derivatives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .metric import MetricError, MetricSpec

REL_STEP = 1e-3
DEGENERATE = 1e-12
X3_TOL = 1e-6
CONVENTIONS = {"default": 1.0, "integrable": -1.0}


class StepError(ValueError):
    pass


def _steps(m: MetricSpec, h):
    if h is None:
        (a1, b1), (a3, b3) = m.domain
        return REL_STEP * (b1 - a1), REL_STEP * (b3 - a3)
    if np.ndim(h):
        return float(h[0]), float(h[1])
    return float(h), float(h)


def default_grid(m: MetricSpec, n1: int = 9, n3: int = 9, h=None, x1_range=None):
    """Interior grid leaving room for the stencils (four steps per side)."""
    h1, h3 = _steps(m, h)
    (a1, b1), (a3, b3) = m.domain
    if x1_range is not None:
        a1, b1 = max(a1, x1_range[0]), min(b1, x1_range[1])
    return np.linspace(a1 + 4 * h1, b1 - 4 * h1, n1), np.linspace(a3 + 4 * h3, b3 - 4 * h3, n3)


def _check_grid(m: MetricSpec, x1, x3, h1, h3):
    (a1, b1), (a3, b3) = m.domain
    if np.min(x1) - 3 * h1 < a1 - 1e-12 or np.max(x1) + 3 * h1 > b1 + 1e-12:
        raise StepError(f"step {h1:g} too large: x1 stencil leaves the domain [{a1:g}, {b1:g}]")
    if np.min(x3) - 2 * h3 < a3 - 1e-12 or np.max(x3) + 2 * h3 > b3 + 1e-12:
        raise StepError(f"step {h3:g} too large: x3 stencil leaves the domain [{a3:g}, {b3:g}]")


class _Stencil:
    """Nested central differences of S around a set of points.

    Metric ratios are cached per integer offset (i, j), meaning the point
    (X1 + i h1, X3 + j h3); a ratio that does not depend on a coordinate
    differences to exactly zero along it.
    """

    def __init__(self, m: MetricSpec, X1, X3, h1, h3):
        self.m, self.X1, self.X3, self.h1, self.h3 = m, X1, X3, h1, h3
        self._cache = {}

    def ratios(self, i, j):
        key = (i, j)
        if key not in self._cache:
            E1, E2, E3 = self.m.coefficients(self.X1 + i * self.h1, self.X3 + j * self.h3)
            E1 = np.abs(E1)
            if np.any(E1 == 0) or np.any(E2 == 0) or np.any(E3 == 0):
                raise MetricError("degenerate metric coefficient on the stencil")
            self._cache[key] = (E3 / (E1 * E2), E2 / (E1 * E3), E1 / (E2 * E3))
        return self._cache[key]

    def S(self, G, Gp, i, j):
        P, Q, _ = self.ratios(i, j)
        dP = (self.ratios(i + 1, j)[0] - self.ratios(i - 1, j)[0]) / (2 * self.h1)
        return Q * (Gp(i) * P + G(i) * dP)

    def dS1(self, G, Gp, i=0, j=0):
        return (self.S(G, Gp, i + 1, j) - self.S(G, Gp, i - 1, j)) / (2 * self.h1)

    def dS3(self, G, Gp, i=0, j=0):
        return (self.S(G, Gp, i, j + 1) - self.S(G, Gp, i, j - 1)) / (2 * self.h3)

    def operator(self, G, Gp, sign):
        T1 = lambda i: self.ratios(i, 0)[0] * self.dS1(G, Gp, i, 0)
        T3 = lambda j: self.ratios(0, j)[2] * self.dS3(G, Gp, 0, j)
        rhs = (T1(1) - T1(-1)) / (2 * self.h1)
        lhs = (T3(1) - T3(-1)) / (2 * self.h3)
        return rhs - sign * lhs


def _probe(k, h1):
    # (x1 - x1_0)^k / k! and its derivative at the offset i h1
    G = lambda i: (i * h1) ** k / math.factorial(k)
    Gp = lambda i: (i * h1) ** (k - 1) / math.factorial(k - 1) if k else 0.0
    return G, Gp


def _alphas(m, X1, X3, h1, h3, sign):
    st = _Stencil(m, X1, X3, h1, h3)
    return np.stack([np.broadcast_to(st.operator(*_probe(k, h1), sign), X1.shape) for k in range(4)])


@dataclass(frozen=True)
class OdeCoefficients:
    """Coefficients of g''' - A g'' - B g' - C g = 0 on a grid.

    ``alpha`` holds the operator coefficients (alpha0..alpha3) after
    Richardson extrapolation from steps h and h/2; ``richardson_delta`` is
    the largest change between the two raw estimates.
    """

    x1: np.ndarray
    x3: np.ndarray
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    alpha: np.ndarray
    alpha_raw: np.ndarray
    leading_coefficient: np.ndarray
    degenerate: np.ndarray
    x3_deviation: float
    richardson_delta: float
    h: tuple[float, float]
    convention: str

    def summary(self) -> dict:
        out = {}
        for name in "ABC":
            v = getattr(self, name)
            out[name] = {"min": float(np.nanmin(v)), "max": float(np.nanmax(v)), "mean": float(np.nanmean(v))}
        out["x3_deviation"] = self.x3_deviation
        out["richardson_delta"] = self.richardson_delta
        out["degenerate_points"] = int(self.degenerate.sum())
        return out


def _x3_deviation(coeffs, mask) -> float:
    dev = 0.0
    for K in coeffs:
        K = np.where(mask, np.nan, K)
        if np.all(np.isnan(K)):
            continue
        with np.errstate(invalid="ignore"):
            spread = np.nanmax(np.nanmax(K, axis=1) - np.nanmin(K, axis=1))
        scale = max(1.0, float(np.nanmax(np.abs(K))))
        if np.isfinite(spread):
            dev = max(dev, spread / scale)
    return float(dev)


def operator_alphas(m: MetricSpec, grid=None, h=None, convention: str = "default"):
    """Raw and Richardson-extrapolated alpha0..alpha3 on ``grid``."""
    sign = CONVENTIONS[convention]
    h1, h3 = _steps(m, h)
    x1, x3 = default_grid(m, h=(h1, h3)) if grid is None else (np.atleast_1d(grid[0]), np.atleast_1d(grid[1]))
    x1, x3 = np.asarray(x1, float), np.asarray(x3, float)
    _check_grid(m, x1, x3, h1, h3)
    X1, X3 = np.meshgrid(x1, x3, indexing="ij")
    coarse = _alphas(m, X1, X3, h1, h3, sign)
    fine = _alphas(m, X1, X3, h1 / 2, h3 / 2, sign)
    return x1, x3, coarse, fine, (4 * fine - coarse) / 3, (h1, h3)


def extract_coefficients(m: MetricSpec, grid=None, h=None, convention: str = "default") -> OdeCoefficients:
    x1, x3, coarse, fine, alpha, steps = operator_alphas(m, grid, h, convention)
    a0, a1, a2, a3 = alpha
    scale = np.max(np.abs(a3))
    degenerate = np.abs(a3) < DEGENERATE * scale if scale > 0 else np.ones_like(a3, dtype=bool)
    safe = np.where(degenerate, 1.0, a3)
    with np.errstate(invalid="ignore", divide="ignore"):
        A = np.where(degenerate, np.nan, -a2 / safe)
        B = np.where(degenerate, np.nan, -a1 / safe)
        C = np.where(degenerate, np.nan, -a0 / safe)
    if degenerate.all():
        raise MetricError("leading coefficient of the existence operator vanishes on the whole grid")
    return OdeCoefficients(
        x1,
        x3,
        A,
        B,
        C,
        alpha,
        coarse,
        a3,
        degenerate,
        _x3_deviation((A, B, C), degenerate),
        float(np.max(np.abs(fine - coarse))),
        steps,
        convention,
    )


def x3_independence(c: OdeCoefficients, tol: float = X3_TOL) -> bool:
    return c.x3_deviation <= tol


# --------------------------------------------------------------------------
# residual of a profile


@dataclass(frozen=True)
class Residual:
    x1: np.ndarray
    x3: np.ndarray
    field: np.ndarray
    sup_norm: float
    field_richardson: np.ndarray
    sup_norm_richardson: float
    h: tuple[float, float]


def _derivs(g, x1):
    return [np.asarray(g(x1, k), float) for k in range(4)]


def maineq_residual(m: MetricSpec, g, grid=None, h=None, convention: str = "default") -> Residual:
    """N[g] on a grid, at step h and Richardson-extrapolated from h, h/2.

    ``g`` is a profile callable ``g(x, order)`` returning exact derivatives.
    """
    if grid is None:
        grid = default_grid(m, h=h, x1_range=(g.a, g.a + g.b))
    x1, x3, coarse, _, alpha, steps = operator_alphas(m, grid, h, convention)
    d = np.stack(_derivs(g, x1))[:, :, None]
    raw = np.sum(coarse * d, axis=0)
    extrap = np.sum(alpha * d, axis=0)
    return Residual(x1, x3, raw, float(np.max(np.abs(raw))), extrap, float(np.max(np.abs(extrap))), steps)


# --------------------------------------------------------------------------
# pressure


@dataclass(frozen=True)
class PressureField:
    """Pressure on a grid, fixed by p(basepoint) = 0."""

    x1: np.ndarray
    x3: np.ndarray
    p: np.ndarray
    dp_dx1: np.ndarray
    dp_dx3: np.ndarray
    compatibility_residual: float
    compatibility_field: np.ndarray
    basepoint: tuple[float, float]


def pressure_gradient(m: MetricSpec, g, x1, x3, eta: float = 1.0, h=None):
    """(dp/dx1, dp/dx3) at arbitrary points from the two Stokes components."""
    h1, h3 = _steps(m, h)
    X1, X3 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x3, float))
    G = lambda i: np.asarray(g(X1 + i * h1, 0))
    Gp = lambda i: np.asarray(g(X1 + i * h1, 1))
    st = _Stencil(m, X1, X3, h1, h3)
    P, _, R = st.ratios(0, 0)
    return -eta * R * st.dS3(G, Gp), eta * P * st.dS1(G, Gp)


def reconstruct_pressure(
    m: MetricSpec, g, basepoint=None, grid=None, eta: float = 1.0, h=None, nodes: int = 129
) -> PressureField:
    """Integrate the pressure gradient along L-shaped paths.

    The path runs from the basepoint along x1 at fixed x3, then along x3.
    The compatibility residual is the largest mismatch between
    d(dp/dx1)/dx3 and d(dp/dx3)/dx1, differenced from the two integrands.
    """
    if nodes < 3 or nodes % 2 == 0:
        raise ValueError("nodes must be odd and at least 3")
    h1, h3 = _steps(m, h)
    if grid is None:
        grid = default_grid(m, h=(h1, h3), x1_range=(g.a, g.a + g.b))
    x1, x3 = np.atleast_1d(np.asarray(grid[0], float)), np.atleast_1d(np.asarray(grid[1], float))
    # the integrand itself is differenced once more for the compatibility check
    _check_grid(m, x1, x3, 2 * h1, 2 * h3)
    if basepoint is None:
        basepoint = (x1[0], x3[0])
    xb1, xb3 = map(float, basepoint)
    t = np.linspace(0.0, 1.0, nodes)

    s1 = xb1 + (x1[:, None] - xb1) * t  # (n1, nodes)
    p1_path, _ = pressure_gradient(m, g, s1, np.full_like(s1, xb3), eta, (h1, h3))
    leg1 = simpson(p1_path, x=s1, axis=-1)  # (n1,)

    s3 = xb3 + (x3[None, :, None] - xb3) * t  # (1, n3, nodes)
    X1 = np.broadcast_to(x1[:, None, None], (x1.size, x3.size, nodes))
    S3 = np.broadcast_to(s3, X1.shape)
    _, p3_path = pressure_gradient(m, g, X1, S3, eta, (h1, h3))
    leg3 = simpson(p3_path, x=S3, axis=-1)  # (n1, n3)

    X1g, X3g = np.meshgrid(x1, x3, indexing="ij")
    p1, p3 = pressure_gradient(m, g, X1g, X3g, eta, (h1, h3))
    p1_up, _ = pressure_gradient(m, g, X1g, X3g + h3, eta, (h1, h3))
    p1_dn, _ = pressure_gradient(m, g, X1g, X3g - h3, eta, (h1, h3))
    _, p3_up = pressure_gradient(m, g, X1g + h1, X3g, eta, (h1, h3))
    _, p3_dn = pressure_gradient(m, g, X1g - h1, X3g, eta, (h1, h3))
    compat = (p1_up - p1_dn) / (2 * h3) - (p3_up - p3_dn) / (2 * h1)
    return PressureField(
        x1, x3, leg1[:, None] + leg3, p1, p3, float(np.max(np.abs(compat))), compat, (xb1, xb3)
    )
