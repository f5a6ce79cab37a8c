"""Versioned JSON save/load for trained models.

The document records the format version, spec (kind, hyperparameters, seed),
training column names, the training log, and kind-specific internals. Loads
reject unknown versions and kinds.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .base import ModelError, RegressorSpec, TrainedModel
from .forest import ForestModel
from .gbdt import GbdtModel
from .ridge import RidgeModel
from .svr import SvrModel
from .tree import RegressionTree

__all__ = ["save_model", "load_model", "model_to_dict", "model_from_dict"]

FORMAT_VERSION = 1


def _tree_to_dict(tree: RegressionTree) -> dict:
    return {
        "feature": tree.feature.tolist(),
        "threshold": tree.threshold.tolist(),
        "left": tree.left.tolist(),
        "right": tree.right.tolist(),
        "value": tree.value.tolist(),
    }


def _tree_from_dict(obj: dict) -> RegressionTree:
    return RegressionTree(
        feature=np.array(obj["feature"], dtype=np.int64),
        threshold=np.array(obj["threshold"], dtype=float),
        left=np.array(obj["left"], dtype=np.int64),
        right=np.array(obj["right"], dtype=np.int64),
        value=np.array(obj["value"], dtype=float),
    )


def model_to_dict(model: TrainedModel) -> dict:
    doc = {
        "format_version": FORMAT_VERSION,
        "kind": model.kind,
        "hyperparameters": model.spec.hyperparameters,
        "seed": model.spec.seed,
        "column_names": list(model.column_names),
        "training_log": model.training_log,
    }
    if isinstance(model, RidgeModel):
        doc["internals"] = {
            "coef": model.coef.tolist(),
            "intercept": model.intercept,
            "alpha": model.alpha,
            "lambda": model.lambda_,
            "n_iter": model.n_iter,
        }
    elif isinstance(model, ForestModel):
        doc["internals"] = {"trees": [_tree_to_dict(t) for t in model.trees]}
    elif isinstance(model, GbdtModel):
        doc["internals"] = {
            "init_value": model.init_value,
            "learning_rate": model.learning_rate,
            "trees": [_tree_to_dict(t) for t in model.trees],
        }
    elif isinstance(model, SvrModel):
        doc["internals"] = {
            "support_vectors": model.support_vectors.tolist(),
            "dual_coef": model.dual_coef.tolist(),
            "bias": model.bias,
            "gamma": model.gamma,
            "final_violation": model.final_violation,
            "n_steps": model.n_steps,
        }
    else:
        raise ModelError(f"cannot serialize model of type {type(model).__name__}")
    return doc


def model_from_dict(doc: dict) -> TrainedModel:
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ModelError(f"unsupported model format version {version!r}")
    kind = doc["kind"]
    spec = RegressorSpec(kind=kind, hyperparameters=doc.get("hyperparameters", {}), seed=doc.get("seed", 0))
    columns = tuple(doc["column_names"])
    log = [float(v) for v in doc.get("training_log", [])]
    internals = doc["internals"]
    if kind == "bayesian_ridge":
        return RidgeModel(
            columns, spec, log,
            coef=np.array(internals["coef"], dtype=float),
            intercept=internals["intercept"],
            alpha=internals["alpha"],
            lambda_=internals["lambda"],
            n_iter=internals["n_iter"],
        )
    if kind == "random_forest":
        return ForestModel(columns, spec, log, [_tree_from_dict(t) for t in internals["trees"]])
    if kind == "gbdt":
        return GbdtModel(
            columns, spec, log,
            init_value=internals["init_value"],
            learning_rate=internals["learning_rate"],
            trees=[_tree_from_dict(t) for t in internals["trees"]],
        )
    if kind == "svr":
        sv = np.array(internals["support_vectors"], dtype=float)
        if sv.size == 0:
            sv = sv.reshape(0, len(columns))
        return SvrModel(
            columns, spec, log,
            support_vectors=sv,
            dual_coef=np.array(internals["dual_coef"], dtype=float),
            bias=internals["bias"],
            gamma=internals["gamma"],
            final_violation=internals["final_violation"],
            n_steps=internals["n_steps"],
        )
    raise ModelError(f"unknown model kind {kind!r}")


def save_model(model: TrainedModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model)), encoding="utf-8")


def load_model(path: str | Path) -> TrainedModel:
    return model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
