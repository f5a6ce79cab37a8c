"""Common fit/predict contract for the four regressor families."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..features import FeatureMatrix

__all__ = [
    "MODEL_KINDS",
    "DEFAULT_HYPERPARAMETERS",
    "ModelError",
    "ConvergenceError",
    "RegressorSpec",
    "TrainedModel",
    "fit",
    "check_columns",
]

MODEL_KINDS = ("bayesian_ridge", "random_forest", "gbdt", "svr")

DEFAULT_HYPERPARAMETERS: dict[str, dict] = {
    "bayesian_ridge": {
        "max_iter": 300,
        "tol": 1e-3,
        "fit_intercept": True,
    },
    "random_forest": {
        "n_trees": 100,
        "max_depth": None,
        "min_samples_split": 2,
        "min_samples_leaf": 1,
        "max_features": "third",  # ceil(p / 3) features per split
        "bootstrap": True,
    },
    "gbdt": {
        "n_rounds": 500,
        "max_depth": 6,
        "learning_rate": 0.03,
        "min_samples_split": 2,
        "min_samples_leaf": 1,
    },
    "svr": {
        "C": 1.0,
        "epsilon": 0.1,
        "gamma": "scale",  # 1 / (p * var(X))
        "tol": 1e-3,
        "max_iter": 2_000_000,  # pair-update cap
    },
}


class ModelError(ValueError):
    """Invalid model specification or inputs."""


class ConvergenceError(RuntimeError):
    """An iterative solver hit its iteration cap before converging."""


@dataclass(frozen=True)
class RegressorSpec:
    """Which model family to fit, with hyperparameters and a seed.

    Unknown hyperparameter names and out-of-range values are rejected up
    front rather than at some point mid-fit.
    """

    kind: str
    hyperparameters: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ModelError(f"unknown model kind {self.kind!r}; expected one of {MODEL_KINDS}")
        defaults = DEFAULT_HYPERPARAMETERS[self.kind]
        unknown = set(self.hyperparameters) - set(defaults)
        if unknown:
            raise ModelError(f"unknown hyperparameters for {self.kind}: {sorted(unknown)}")
        object.__setattr__(self, "hyperparameters", dict(self.hyperparameters))
        _validate_hyperparameters(self.kind, self.resolved())

    def resolved(self) -> dict:
        merged = dict(DEFAULT_HYPERPARAMETERS[self.kind])
        merged.update(self.hyperparameters)
        return merged


def _require_positive(params: dict, *names: str) -> None:
    for name in names:
        value = params[name]
        if not (isinstance(value, (int, float)) and value > 0):
            raise ModelError(f"hyperparameter {name!r} must be positive, got {value!r}")


def _validate_hyperparameters(kind: str, params: dict) -> None:
    if kind == "bayesian_ridge":
        _require_positive(params, "tol")
        if int(params["max_iter"]) < 1:
            raise ModelError("max_iter must be >= 1")
    elif kind == "random_forest":
        if int(params["n_trees"]) < 1:
            raise ModelError("n_trees must be >= 1")
        if params["max_depth"] is not None and int(params["max_depth"]) < 1:
            raise ModelError("max_depth must be >= 1")
        if params["max_features"] != "third" and int(params["max_features"]) < 1:
            raise ModelError("max_features must be >= 1 or 'third'")
    elif kind == "gbdt":
        if int(params["n_rounds"]) < 1:
            raise ModelError("n_rounds must be >= 1")
        if int(params["max_depth"]) < 1:
            raise ModelError("max_depth must be >= 1")
        _require_positive(params, "learning_rate")
    elif kind == "svr":
        _require_positive(params, "C", "epsilon", "tol")
        if params["gamma"] != "scale":
            _require_positive(params, "gamma")
        if int(params["max_iter"]) < 1:
            raise ModelError("max_iter must be >= 1")


class TrainedModel:
    """Base class: a fitted regressor bound to its training column names."""

    kind: str = ""

    def __init__(self, column_names: tuple[str, ...], spec: RegressorSpec, training_log: list[float]):
        self.column_names = tuple(column_names)
        self.spec = spec
        self.training_log = list(training_log)

    def predict(self, X: FeatureMatrix) -> np.ndarray:
        check_columns(self, X)
        return self._predict_values(X.values)

    def predict_values(self, values: np.ndarray) -> np.ndarray:
        """Predict on a raw array whose columns follow ``column_names``."""
        values = np.asarray(values, dtype=float)
        if values.ndim != 2 or values.shape[1] != len(self.column_names):
            raise ModelError(
                f"expected a 2-D array with {len(self.column_names)} columns, got shape {values.shape}"
            )
        return self._predict_values(values)

    def _predict_values(self, values: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def training_curve(self) -> list[float]:
        """Per-iteration objective values recorded while fitting."""
        return list(self.training_log)


def check_columns(model: TrainedModel, X: FeatureMatrix) -> None:
    if X.names == model.column_names:
        return
    if len(X.names) != len(model.column_names):
        raise ModelError(
            f"column count mismatch: model has {len(model.column_names)}, matrix has {len(X.names)}"
        )
    for got, want in zip(X.names, model.column_names):
        if got != want:
            raise ModelError(f"column mismatch: expected {want!r}, got {got!r}")


def _check_training_inputs(X: FeatureMatrix, y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=float).ravel()
    if X.n_rows != len(y):
        raise ModelError(f"X has {X.n_rows} rows but y has {len(y)} entries")
    if len(y) < 2:
        raise ModelError("need at least 2 training rows")
    if not np.all(np.isfinite(y)):
        raise ModelError("y contains non-finite values")
    return y


def fit(spec: RegressorSpec, X: FeatureMatrix, y) -> TrainedModel:
    """Fit one of the four regressor families; deterministic given
    (spec.seed, input order)."""
    from .forest import fit_random_forest
    from .gbdt import fit_gbdt
    from .ridge import fit_bayesian_ridge
    from .svr import fit_svr

    y = _check_training_inputs(X, y)
    fitters = {
        "bayesian_ridge": fit_bayesian_ridge,
        "random_forest": fit_random_forest,
        "gbdt": fit_gbdt,
        "svr": fit_svr,
    }
    return fitters[spec.kind](spec, X, y)
