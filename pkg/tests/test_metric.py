import json
import math

import numpy as np
import pytest

from curvedflow.metric import (
    PRESET_NAMES,
    MetricError,
    MetricSpec,
    conformal_factor_for_k1,
    conformal_k1,
    load_metric,
    metric_from_dict,
    preset,
)


def test_all_presets_build():
    params = {"conical": {"alpha": math.pi / 4}, "toroidal": {"a": 1.0}}
    for name in PRESET_NAMES:
        m = preset(name, params.get(name))
        E = m.coefficients(*m.grid(5, 5))
        assert all(np.all(np.isfinite(v)) for v in E)


def test_required_params():
    with pytest.raises(MetricError, match="alpha"):
        preset("conical")
    with pytest.raises(MetricError):
        preset("conical", {"alpha": 2.0})


def test_x2_dependence_rejected():
    with pytest.raises(MetricError, match="x2"):
        MetricSpec("bad", "1", "x2", "1", ((0, 1), (0, 1)))


def test_vanishing_coefficient_reports_point():
    with pytest.raises(MetricError) as info:
        MetricSpec("bad", "1", "x1", "1", ((-1, 1), (0, 1)))
    assert info.value.path == "e2"
    assert info.value.point is not None and abs(info.value.point[0]) <= 1 / 16


def test_json_round_trip(tmp_path):
    data = {
        "name": "cone",
        "e1": "1",
        "e2": "x1*cos(alpha)+x3*sin(alpha)",
        "e3": 1,
        "params": {"alpha": 0.5},
        "domain": {"x1": [1, 2], "x3": [1, 2]},
    }
    path = tmp_path / "m.json"
    path.write_text(json.dumps(data))
    m = load_metric(path)
    assert m.params == {"alpha": 0.5}
    again = metric_from_dict({k: v for k, v in m.to_json().items()})
    E = again.coefficients(1.5, 1.5)
    assert E[1] == pytest.approx(1.5 * math.cos(0.5) + 1.5 * math.sin(0.5))


def test_schema_error_path():
    with pytest.raises(MetricError) as info:
        metric_from_dict({"name": "m", "e1": "1", "e2": "1", "e3": "1", "domain": {"x1": [0], "x3": [0, 1]}})
    assert info.value.path == "$.domain.x1"


@pytest.mark.parametrize("k1", [-2.0, -2 / 3, 0.0, 0.5])
def test_conformal_factor_for_k1(k1):
    f = conformal_factor_for_k1(k1)
    rep = conformal_k1(f, (0.0, 1.0))
    assert rep.is_constant
    assert rep.k1_constant == pytest.approx(k1, abs=1e-12)


def test_k1_of_known_factors():
    # 1/f^3 = 1 + x3 is linear, hence k1 = 0
    assert conformal_k1("(1+x3)^(-1/3)", (0, 2)).k1_constant == pytest.approx(0.0, abs=1e-13)
    rep = conformal_k1("1/(1+x3)", (0, 1))
    assert not rep.is_constant
    # 1/f^3 = (1+x)^3: k1 = -(2/3) * 6 / (1+x)^2
    assert rep.k1_values[0] == pytest.approx(-4.0)


def test_conformal_preset_k1_and_f_exclusive():
    with pytest.raises(MetricError):
        preset("conformal", {"f": "1", "k1": 0.0})
    m = preset("conformal", {"k1": -1.0})
    assert m.conformal_factor is not None
