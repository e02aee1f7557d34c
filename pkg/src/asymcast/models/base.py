"""Shared model record and prediction dispatch.

A fitted model is its family tag, the hyperparameters it was fitted
with, an immutable state object, the loss mode used for training, and a
symmetric/asymmetric provenance flag. Prediction is deterministic and
safe for concurrent callers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import SchemaError
from ..losses import CostSpec

FAMILY_OLS = "ols"
FAMILY_RIDGE = "ridge"
FAMILY_QUANTILE = "quantile"
FAMILY_KNN = "knn"
FAMILY_TREE = "tree"
FAMILY_NN = "nn"
FAMILY_BAGGED_TREE = "bagged_tree"
FAMILY_RANDOM_FOREST = "random_forest"

FAMILIES = (
    FAMILY_OLS,
    FAMILY_RIDGE,
    FAMILY_QUANTILE,
    FAMILY_KNN,
    FAMILY_TREE,
    FAMILY_NN,
    FAMILY_BAGGED_TREE,
    FAMILY_RANDOM_FOREST,
)

LINEAR_FAMILIES = (FAMILY_OLS, FAMILY_RIDGE, FAMILY_QUANTILE)
NONLINEAR_FAMILIES = (
    FAMILY_KNN,
    FAMILY_TREE,
    FAMILY_NN,
    FAMILY_BAGGED_TREE,
    FAMILY_RANDOM_FOREST,
)

SYMMETRIC_LOSS = CostSpec("squared_error")


@dataclass(frozen=True)
class Model:
    family: str
    hyperparams: dict
    state: object
    n_features: int
    loss_mode: CostSpec = SYMMETRIC_LOSS
    provenance: str = field(default="")

    def __post_init__(self):
        if not self.provenance:
            asym = self.loss_mode.family != "squared_error" or self.family == FAMILY_QUANTILE
            object.__setattr__(self, "provenance", "asymmetric" if asym else "symmetric")

    def describe(self) -> str:
        params = ", ".join(f"{k}={v}" for k, v in sorted(self.hyperparams.items()))
        return f"{self.family}({params})"


def predict(model: Model, X) -> np.ndarray:
    """Forecast for each row of X; raises SchemaError on width mismatch."""
    X = np.ascontiguousarray(np.asarray(X, dtype=float))
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise SchemaError(
            f"{model.family} model was fitted on {model.n_features} columns, "
            f"got input of shape {X.shape}"
        )
    return model.state.predict(X)
