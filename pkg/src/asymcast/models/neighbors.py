"""k-nearest-neighbor regression on standardized features."""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from ..errors import ConfigurationError, InvalidInputError
from .base import FAMILY_KNN, Model

ALGORITHMS = ("brute", "kd_tree")


class KnnState:
    def __init__(self, X, y, k, algorithm):
        self.X = np.ascontiguousarray(X, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self.k = k
        self.algorithm = algorithm
        self._tree = cKDTree(self.X) if algorithm == "kd_tree" else None

    def predict(self, X: np.ndarray) -> np.ndarray:
        if self.algorithm == "kd_tree":
            _, idx = self._tree.query(X, k=self.k)
            if self.k == 1:
                idx = idx[:, None]
            return self.y[idx].mean(axis=1)
        out = np.empty(X.shape[0])
        train_sq = np.einsum("ij,ij->i", self.X, self.X)
        chunk = max(1, 2_000_000 // max(1, self.X.shape[0]))
        for lo in range(0, X.shape[0], chunk):
            Q = X[lo : lo + chunk]
            d2 = train_sq[None, :] - 2.0 * (Q @ self.X.T)  # + |q|^2, constant per row
            if self.k < self.X.shape[0]:
                idx = np.argpartition(d2, self.k - 1, axis=1)[:, : self.k]
            else:
                idx = np.broadcast_to(np.arange(self.X.shape[0]), (Q.shape[0], self.X.shape[0]))
            out[lo : lo + Q.shape[0]] = self.y[idx].mean(axis=1)
        return out


def fit_knn(X, y, k_neighbors: int, algorithm: str = "brute") -> Model:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise InvalidInputError(f"bad design: X {X.shape}, y {y.shape}")
    if not 1 <= k_neighbors <= X.shape[0]:
        raise ConfigurationError(
            f"k_neighbors must lie in [1, n={X.shape[0]}], got {k_neighbors}"
        )
    if algorithm not in ALGORITHMS:
        raise ConfigurationError(f"unknown knn algorithm {algorithm!r}; use one of {ALGORITHMS}")
    state = KnnState(X, y, k_neighbors, algorithm)
    return Model(FAMILY_KNN, {"k": k_neighbors, "algorithm": algorithm}, state, X.shape[1])
