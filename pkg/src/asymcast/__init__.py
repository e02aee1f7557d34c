"""Forecasting under asymmetric error costs.

Loss families, asymmetry-aware estimators, ex-post markdown correction,
cost-sensitive ensemble selection, and a sweep harness over asymmetry
levels.
"""

__version__ = "0.1.0"

from .losses import CostSpec, eval_loss, eval_mean, grad_loss, tau_from_weights

__all__ = [
    "__version__",
    "CostSpec",
    "eval_loss",
    "eval_mean",
    "grad_loss",
    "tau_from_weights",
]
