"""Random forest regressor: bootstrapped CART trees with per-split feature
subsampling, averaged predictions."""

from __future__ import annotations

import math

import numpy as np

from ..features import FeatureMatrix
from .base import ModelError, RegressorSpec, TrainedModel
from .tree import RegressionTree, grow_tree

__all__ = ["ForestModel", "fit_random_forest"]


class ForestModel(TrainedModel):
    kind = "random_forest"

    def __init__(self, column_names, spec, training_log, trees: list[RegressionTree]):
        super().__init__(column_names, spec, training_log)
        self.trees = trees

    def _predict_values(self, values: np.ndarray) -> np.ndarray:
        if len(values) == 0:
            return np.zeros(0)
        total = np.zeros(len(values))
        for tree in self.trees:
            total += tree.predict(values)
        return total / len(self.trees)


def fit_random_forest(spec: RegressorSpec, X: FeatureMatrix, y: np.ndarray) -> ForestModel:
    params = spec.resolved()
    A = np.asarray(X.values, dtype=float)
    if not np.all(np.isfinite(A)):
        raise ModelError("training matrix contains non-finite values")
    n, p = A.shape
    if params["max_features"] == "third":
        max_features = math.ceil(p / 3)
    else:
        max_features = min(int(params["max_features"]), p)

    rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 1]))
    trees = []
    for _ in range(int(params["n_trees"])):
        if params["bootstrap"]:
            rows = rng.integers(0, n, size=n)
            Xb, yb = A[rows], y[rows]
        else:
            Xb, yb = A, y
        trees.append(
            grow_tree(
                Xb,
                yb,
                max_depth=params["max_depth"],
                min_samples_split=int(params["min_samples_split"]),
                min_samples_leaf=int(params["min_samples_leaf"]),
                max_features=max_features,
                rng=rng,
            )
        )

    model = ForestModel(X.names, spec, [], trees)
    # no iterative objective: the log is the final training RMSE alone
    resid = y - model.predict_values(A)
    model.training_log = [float(np.sqrt(np.mean(resid**2)))]
    return model
