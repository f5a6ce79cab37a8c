"""Gradient-boosted regression trees: stagewise least-squares residual
fitting with shrinkage.

Each round fits a depth-limited CART tree to the current residuals and adds
``learning_rate`` times its prediction. Because every leaf stores the mean
residual of its rows, each stage is a projection and the training RMSE is
non-increasing for any learning rate in (0, 2)."""

from __future__ import annotations

import numpy as np

from ..features import FeatureMatrix
from .base import ModelError, RegressorSpec, TrainedModel
from .tree import RegressionTree, grow_tree

__all__ = ["GbdtModel", "fit_gbdt"]


class GbdtModel(TrainedModel):
    kind = "gbdt"

    def __init__(self, column_names, spec, training_log, init_value: float, learning_rate: float, trees: list[RegressionTree]):
        super().__init__(column_names, spec, training_log)
        self.init_value = float(init_value)
        self.learning_rate = float(learning_rate)
        self.trees = trees

    def _predict_values(self, values: np.ndarray) -> np.ndarray:
        out = np.full(len(values), self.init_value)
        if len(values) == 0:
            return out
        for tree in self.trees:
            out += self.learning_rate * tree.predict(values)
        return out


def fit_gbdt(spec: RegressorSpec, X: FeatureMatrix, y: np.ndarray) -> GbdtModel:
    params = spec.resolved()
    A = np.asarray(X.values, dtype=float)
    if not np.all(np.isfinite(A)):
        raise ModelError("training matrix contains non-finite values")

    lr = float(params["learning_rate"])
    n_rounds = int(params["n_rounds"])
    init_value = float(y.mean())
    current = np.full(len(y), init_value)
    rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 2]))

    trees: list[RegressionTree] = []
    curve: list[float] = []
    for _ in range(n_rounds):
        residual = y - current
        tree = grow_tree(
            A,
            residual,
            max_depth=int(params["max_depth"]),
            min_samples_split=int(params["min_samples_split"]),
            min_samples_leaf=int(params["min_samples_leaf"]),
            max_features=None,
            rng=rng,
        )
        current = current + lr * tree.predict(A)
        trees.append(tree)
        curve.append(float(np.sqrt(np.mean((y - current) ** 2))))

    return GbdtModel(X.names, spec, curve, init_value, lr, trees)
