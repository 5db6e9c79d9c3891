"""Cost, gradients, L-BFGS and multistart search over mesh parameters."""

from .lbfgs import LBFGSOptions, LBFGSResult, lbfgs_minimize
from .objective import Metrics, SchemeObjective, cost, cost_and_gradient, gradient
from .search import (
    CertificationReport,
    OptimizationResult,
    OptimizerConfig,
    certify,
    multistart,
    polish,
)

__all__ = [
    "CertificationReport",
    "LBFGSOptions",
    "LBFGSResult",
    "Metrics",
    "OptimizationResult",
    "OptimizerConfig",
    "SchemeObjective",
    "certify",
    "cost",
    "cost_and_gradient",
    "gradient",
    "lbfgs_minimize",
    "multistart",
    "polish",
]
