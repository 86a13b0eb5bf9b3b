"""Symmetric unidirectional Stokes flow and Darcy's law on curved 3-manifolds."""

from .darcy import (
    DarcyMobility,
    average_along_gap,
    conformal_mobility,
    hypergeometric_F124,
    mobility_series,
    pseudosphere_mobility,
)
from .expr import derivative, evaluate, parse
from .metric import MetricSpec, conformal_k1, load_metric, preset
from .profiles import FlowProfile, conformal_profile, minkowski_profile, quadrature_profile, velocity_field
from .separability import Existence, check_flow_existence, test_separable
from .stokes_op import extract_coefficients, maineq_residual, reconstruct_pressure, x3_independence

__version__ = "0.1.0"
