"""Tensor calculus with two metrics: relative Christoffel and curvature tensors."""

from .catalog import MetricManifest, builtin, builtin_names, load_manifest, random_metric, resolve
from .checks import run_check, run_suite
from .connection import (
    MetricField,
    christoffel_classic,
    christoffel_relative,
    covariant_derivative,
    inverse_metric,
)
from .curvature import (
    flatness_check,
    lowered_riemann,
    ricci,
    riemann_classic,
    riemann_relative,
    scalar_curvature,
)
from .diff import DiffMode, ExprField, FieldJet, jet
from .errors import BimetricError
from .expr import Expression, evaluate, parse
from .report import ResidualReport
from .tensor import ChartSpec, TensorComponents, contract, tensor_product

__version__ = "0.1.0"

__all__ = [
    "BimetricError",
    "builtin",
    "builtin_names",
    "ChartSpec",
    "christoffel_classic",
    "christoffel_relative",
    "contract",
    "covariant_derivative",
    "DiffMode",
    "evaluate",
    "Expression",
    "ExprField",
    "FieldJet",
    "flatness_check",
    "inverse_metric",
    "jet",
    "load_manifest",
    "lowered_riemann",
    "MetricField",
    "MetricManifest",
    "parse",
    "random_metric",
    "ResidualReport",
    "resolve",
    "ricci",
    "riemann_classic",
    "riemann_relative",
    "run_check",
    "run_suite",
    "scalar_curvature",
    "tensor_product",
    "TensorComponents",
]
