"""Four regressor families behind one fit/predict contract."""

from .base import (
    DEFAULT_HYPERPARAMETERS,
    MODEL_KINDS,
    ConvergenceError,
    ModelError,
    RegressorSpec,
    TrainedModel,
    check_columns,
    fit,
)
from .forest import ForestModel
from .gbdt import GbdtModel
from .io import load_model, model_from_dict, model_to_dict, save_model
from .ridge import RidgeModel, posterior_mean
from .svr import SvrModel, rbf_kernel
from .tree import RegressionTree, grow_tree

__all__ = [
    "DEFAULT_HYPERPARAMETERS",
    "MODEL_KINDS",
    "ConvergenceError",
    "ModelError",
    "RegressorSpec",
    "TrainedModel",
    "check_columns",
    "fit",
    "ForestModel",
    "GbdtModel",
    "RidgeModel",
    "SvrModel",
    "RegressionTree",
    "grow_tree",
    "posterior_mean",
    "rbf_kernel",
    "load_model",
    "save_model",
    "model_to_dict",
    "model_from_dict",
]
