"""Orthogonal metrics ds^2 = eps1 E1^2 dx1^2 + E2^2 dx2^2 + E3^2 dx3^2.

Coordinate roles are fixed throughout the package: x1 is the gap (normal)
direction, x2 the ignored symmetry direction and x3 the flow direction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import jsonschema
import numpy as np

from . import expr as ex
from .expr import Expression

VALIDATION_GRID = 33
K1_TOLERANCE = 1e-9


class MetricError(ValueError):
    def __init__(self, message: str, path: str | None = None, point: tuple[float, float] | None = None):
        super().__init__(message)
        self.path = path
        self.point = point


@dataclass(frozen=True)
class MetricSpec:
    """Validated orthogonal metric on a box in (x1, x3).

    The coefficients may be given as expression text; they are parsed
    against ``x1``, ``x3`` and the keys of ``params``. Construction fails
    with :class:`MetricError` when a coefficient vanishes or changes sign
    on the validation grid.
    """

    name: str
    e1: Expression
    e2: Expression
    e3: Expression
    domain: tuple[tuple[float, float], tuple[float, float]]
    epsilon1: int = 1
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        params = {k: float(v) for k, v in dict(self.params).items()}
        object.__setattr__(self, "params", params)
        allowed = {"x1", "x2", "x3", *params}
        for key in ("e1", "e2", "e3"):
            value = getattr(self, key)
            try:
                e = ex.as_expression(value, allowed)
            except ex.ExprError as err:
                raise MetricError(f"{key}: {err}", path=key) from err
            if ex.depends_on(e, "x2"):
                raise MetricError(f"{key}: dependence on x2 is forbidden", path=key)
            object.__setattr__(self, key, e)
        if self.epsilon1 not in (1, -1):
            raise MetricError("epsilon1 must be +1 or -1", path="epsilon1")
        (a1, b1), (a3, b3) = self.domain
        if not (a1 < b1 and a3 < b3):
            raise MetricError("domain intervals must be non-empty", path="domain")
        object.__setattr__(self, "domain", ((float(a1), float(b1)), (float(a3), float(b3))))
        self._validate(VALIDATION_GRID)

    def _validate(self, n: int):
        (a1, b1), (a3, b3) = self.domain
        x1, x3 = np.meshgrid(np.linspace(a1, b1, n), np.linspace(a3, b3, n), indexing="ij")
        for key, values in zip(("e1", "e2", "e3"), self.coefficients(x1, x3, _checked=False)):
            sign = np.sign(values)
            bad = sign == 0
            bad[:-1, :] |= sign[:-1, :] != sign[1:, :]
            bad[:, :-1] |= sign[:, :-1] != sign[:, 1:]
            if bad.any():
                i, j = np.argwhere(bad)[0]
                point = (float(x1[i, j]), float(x3[i, j]))
                raise MetricError(f"{key} vanishes near (x1, x3) = {point}", path=key, point=point)

    def coefficients(self, x1, x3, _checked: bool = True):
        """Return (E1, E2, E3) evaluated at the given points."""
        env = {"x1": x1, "x3": x3, **self.params}
        try:
            return tuple(np.asarray(ex.evaluate(e, env), dtype=float) for e in (self.e1, self.e2, self.e3))
        except ex.ExprDomainError as err:
            raise MetricError(str(err)) from err

    def evaluate(self, e: Expression, x1, x3):
        return np.asarray(ex.evaluate(e, {"x1": x1, "x3": x3, **self.params}), dtype=float)

    def grid(self, n1: int, n3: int):
        (a1, b1), (a3, b3) = self.domain
        return np.linspace(a1, b1, n1), np.linspace(a3, b3, n3)

    @property
    def conformal_factor(self) -> Expression | None:
        """f when the metric is f(x3)^2 times the flat metric, else None."""
        if self.e1 == self.e2 == self.e3 and not ex.depends_on(self.e1, "x1"):
            return self.e1
        return None

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "e1": ex.to_string(self.e1),
            "e2": ex.to_string(self.e2),
            "e3": ex.to_string(self.e3),
            "epsilon1": self.epsilon1,
            "params": dict(self.params),
            "domain": {"x1": list(self.domain[0]), "x3": list(self.domain[1])},
        }


# --------------------------------------------------------------------------
# preset catalog
#
#   name                    x1    x2    x3    (E1, E2, E3)
#   cartesian               x     y     z     (1, 1, 1)
#   cylindrical_zflow       rho   phi   z     (1, rho, 1)
#   cylindrical_radial      z     phi   rho   (1, rho, 1) -> (1, x3, 1)
#   cylindrical_azimuthal   rho   z     phi   (1, 1, rho) -> (1, 1, x1)
#   spherical_polar         r     phi   theta (1, r sin(theta), r)
#   minkowski_pseudosphere  r     phi   tau   (1, r sinh(tau), r), eps1 = -1
#   conformal               x     y     z     (f, f, f), f = f(x3)
#   conical                 eta   phi   rho   (1, eta cos(alpha) + rho sin(alpha), 1)
#   toroidal                r     phi   theta (1, a + r cos(theta), r)

_PRESETS = {
    "cartesian": (("1", "1", "1"), ((0.0, 1.0), (0.0, 1.0)), 1),
    "cylindrical_zflow": (("1", "x1", "1"), ((0.5, 2.5), (0.0, 1.0)), 1),
    "cylindrical_radial": (("1", "x3", "1"), ((0.0, 1.0), (0.5, 2.5)), 1),
    "cylindrical_azimuthal": (("1", "1", "x1"), ((0.5, 2.5), (0.0, math.pi)), 1),
    "spherical_polar": (("1", "x1*sin(x3)", "x1"), ((0.5, 2.5), (0.3, math.pi - 0.3)), 1),
    "minkowski_pseudosphere": (("1", "x1*sinh(x3)", "x1"), ((0.5, 2.5), (0.2, 2.0)), -1),
    "conical": (("1", "x1*cos(alpha)+x3*sin(alpha)", "1"), ((1.0, 2.0), (1.0, 2.0)), 1),
    "toroidal": (("1", "a+x1*cos(x3)", "x1"), ((0.2, 0.8), (0.0, 1.0)), 1),
}
_CONFORMAL_DOMAIN = ((0.0, 1.0), (0.0, 1.0))
_REQUIRED = {"conical": ("alpha",), "toroidal": ("a",)}

PRESET_NAMES = tuple(sorted([*_PRESETS, "conformal"]))


def conformal_factor_for_k1(k1: float) -> str:
    """A conformal factor f(x3) = y^(-1/3) whose k1 is the given constant.

    y solves y'' = -(3/2) k1 y with y(0) = 1, y'(0) = 0.
    """
    if k1 == 0:
        return "1"
    c = math.sqrt(1.5 * abs(k1))
    return f"cosh({c!r}*x3)^(-1/3)" if k1 < 0 else f"cos({c!r}*x3)^(-1/3)"


def preset(name: str, params: Mapping[str, object] | None = None, domain=None) -> MetricSpec:
    """Build a catalog metric; ``domain`` overrides the default box."""
    params = dict(params or {})
    if name == "conformal":
        if "f" in params and "k1" in params:
            raise MetricError("give either f or k1 for the conformal preset", path="params")
        if "k1" in params:
            f = conformal_factor_for_k1(float(params.pop("k1")))
        else:
            f = params.pop("f", "1")
        numeric = {k: float(v) for k, v in params.items()}
        if not isinstance(f, str):
            f = ex.to_string(ex.as_expression(f))
        return MetricSpec("conformal", f, f, f, domain or _CONFORMAL_DOMAIN, 1, numeric)
    if name not in _PRESETS:
        raise MetricError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}", path="preset")
    for key in _REQUIRED.get(name, ()):
        if key not in params:
            raise MetricError(f"preset {name!r} needs parameter {key!r}", path=f"params.{key}")
    numeric = {k: float(v) for k, v in params.items()}
    if name == "conical" and not 0 < numeric["alpha"] < math.pi / 2:
        raise MetricError("cone angle must lie in (0, pi/2)", path="params.alpha")
    if name == "toroidal" and numeric["a"] <= 0:
        raise MetricError("torus radius a must be positive", path="params.a")
    (e1, e2, e3), default_domain, eps = _PRESETS[name]
    return MetricSpec(name, e1, e2, e3, domain or default_domain, eps, numeric)


# --------------------------------------------------------------------------
# conformal factor diagnostics


@dataclass(frozen=True)
class ConformalFactorReport:
    x3: np.ndarray
    k1_values: np.ndarray
    is_constant: bool
    k1_constant: float
    tolerance: float


def k1_expression(f: Expression) -> Expression:
    """k1 = -(2/3) f^3 (1/f^3)'' as an (unsimplified) expression in x3."""
    cube = ex.power(f, ex.Const(3.0))
    y = ex.div(ex.ONE, cube)
    ypp = ex.derivative(ex.derivative(y, "x3"), "x3")
    return ex.mul(ex.Const(-2.0 / 3.0), ex.mul(cube, ypp))


def conformal_k1(
    f,
    domain: tuple[float, float],
    grid_size: int = 65,
    tol: float = K1_TOLERANCE,
    params: Mapping[str, float] | None = None,
) -> ConformalFactorReport:
    params = dict(params or {})
    f = ex.as_expression(f, {"x3", *params})
    x3 = np.linspace(domain[0], domain[1], grid_size)
    fv = np.asarray(ex.evaluate(f, {"x3": x3, **params}))
    if np.any(fv <= 0):
        raise ex.ExprDomainError("conformal factor must be positive", f)
    k1 = np.asarray(ex.evaluate(k1_expression(f), {"x3": x3, **params}), dtype=float)
    mean = float(np.mean(k1))
    constant = bool(np.max(np.abs(k1 - mean)) <= tol * (1.0 + abs(mean)))
    return ConformalFactorReport(x3, k1, constant, mean, tol)


# --------------------------------------------------------------------------
# JSON ingestion

METRIC_SCHEMA = {
    "type": "object",
    "required": ["name", "e1", "e2", "e3", "domain"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "e1": {"type": ["string", "number"]},
        "e2": {"type": ["string", "number"]},
        "e3": {"type": ["string", "number"]},
        "epsilon1": {"enum": [1, -1]},
        "params": {"type": "object", "additionalProperties": {"type": "number"}},
        "domain": {
            "type": "object",
            "required": ["x1", "x3"],
            "additionalProperties": False,
            "properties": {
                "x1": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
                "x3": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
            },
        },
    },
}


def metric_from_dict(data: dict) -> MetricSpec:
    try:
        jsonschema.validate(data, METRIC_SCHEMA)
    except jsonschema.ValidationError as err:
        path = "$" + "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in err.absolute_path)
        raise MetricError(f"{path}: {err.message}", path=path) from err
    dom = data["domain"]
    return MetricSpec(
        data["name"],
        str(data["e1"]),
        str(data["e2"]),
        str(data["e3"]),
        (tuple(dom["x1"]), tuple(dom["x3"])),
        data.get("epsilon1", 1),
        data.get("params", {}),
    )


def load_metric(file_path) -> MetricSpec:
    with open(Path(file_path)) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as err:
            raise MetricError(f"invalid JSON: {err}", path="$") from err
    return metric_from_dict(data)
