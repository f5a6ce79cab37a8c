"""Feature attributions: permutation importance, exact Shapley values for
linear and tree models, Monte-Carlo Shapley for kernel models, and a
brute-force enumeration oracle for verification.

Shapley values use interventional (background-conditioned) semantics
throughout: "feature absent" means "drawn from the background rows", which
is exactly what the brute-force oracle computes, so the fast per-tree
recursion can be checked against it bit-for-bit.
"""

from __future__ import annotations

import io
import csv
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .evaluate import rmse
from .features import FeatureMatrix
from .models import ForestModel, GbdtModel, RidgeModel, SvrModel, TrainedModel, check_columns
from .models.tree import RegressionTree

__all__ = [
    "ExplainError",
    "ImportanceEntry",
    "ImportanceReport",
    "ShapMatrix",
    "permutation_importance",
    "shap",
    "shap_bruteforce",
]

METHODS = ("linear_exact", "tree_exact", "montecarlo")


class ExplainError(ValueError):
    """Invalid attribution inputs."""


# ---------------------------------------------------------------------------
# Permutation importance
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ImportanceEntry:
    feature: str
    group: str
    importance: float
    std: float


@dataclass(frozen=True)
class ImportanceReport:
    entries: tuple[ImportanceEntry, ...]
    repeats: int
    seed: int

    def sorted_entries(self) -> list[ImportanceEntry]:
        return sorted(self.entries, key=lambda e: (-e.importance, e.feature))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["feature", "group", "importance", "std"])
        for e in self.sorted_entries():
            writer.writerow([e.feature, e.group, f"{e.importance:.10g}", f"{e.std:.10g}"])
        return buf.getvalue()


def permutation_importance(
    model: TrainedModel,
    X_test: FeatureMatrix,
    y_test,
    repeats: int = 10,
    seed: int = 0,
) -> ImportanceReport:
    """Mean RMSE increase after shuffling each feature column.

    Shuffles are seeded per (seed, column, repeat), so results do not depend
    on evaluation order and are safe to parallelize. The input matrix is
    never mutated. Larger values indicate greater importance.
    """
    check_columns(model, X_test)
    if repeats < 1:
        raise ExplainError(f"repeats must be >= 1, got {repeats}")
    y_test = np.asarray(y_test, dtype=float).ravel()
    base = rmse(y_test, model.predict(X_test))
    n = X_test.n_rows

    entries = []
    for j, (name, group) in enumerate(zip(X_test.names, X_test.groups)):
        # all repeats for one feature go through a single stacked predict call
        stacked = np.tile(X_test.values, (repeats, 1))
        for r in range(repeats):
            rng = np.random.default_rng(np.random.SeedSequence([seed, j, r]))
            perm = rng.permutation(n)
            stacked[r * n : (r + 1) * n, j] = X_test.values[perm, j]
        preds = model.predict_values(stacked)
        deltas = np.array(
            [rmse(y_test, preds[r * n : (r + 1) * n]) - base for r in range(repeats)]
        )
        std = float(np.std(deltas, ddof=1)) if repeats > 1 else 0.0
        entries.append(ImportanceEntry(name, group, float(np.mean(deltas)), std))
    return ImportanceReport(tuple(entries), repeats=repeats, seed=seed)


# ---------------------------------------------------------------------------
# Shapley values
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ShapMatrix:
    """Per-row, per-feature attributions plus the background base value.

    For every row, base_value + sum(values[row]) equals the model prediction
    up to the method tolerance; ``additivity_gap`` records the observed
    worst case. Monte-Carlo results carry per-feature standard errors.
    """

    row_ids: tuple[str, ...]
    names: tuple[str, ...]
    groups: tuple[str, ...]
    values: np.ndarray
    base_value: float
    method: str
    background_size: int
    seed: int
    additivity_gap: float = 0.0
    stderr: np.ndarray | None = None

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["policy_id", "feature", "group", "shap_value"])
        for r, rid in enumerate(self.row_ids):
            for c, (name, group) in enumerate(zip(self.names, self.groups)):
                writer.writerow([rid, name, group, f"{self.values[r, c]:.10g}"])
        return buf.getvalue()


def _auto_method(model: TrainedModel) -> str:
    if isinstance(model, RidgeModel):
        return "linear_exact"
    if isinstance(model, (GbdtModel, ForestModel)):
        return "tree_exact"
    if isinstance(model, SvrModel):
        return "montecarlo"
    raise ExplainError(f"no attribution method for model type {type(model).__name__}")


def shap(
    model: TrainedModel,
    X: FeatureMatrix,
    background: FeatureMatrix,
    method: str | None = None,
    mc_samples: int = 200,
    seed: int = 0,
) -> ShapMatrix:
    """Shapley attributions for every row of X against a background set.

    Method is auto-selected from the model kind unless forced: exact linear
    attribution for ridge, exact per-tree recursion for tree ensembles, and
    permutation-sampling Monte-Carlo otherwise (allowed for any model)."""
    check_columns(model, X)
    check_columns(model, background)
    if background.n_rows == 0:
        raise ExplainError("background set is empty")
    if method is None:
        method = _auto_method(model)
    if method not in METHODS:
        raise ExplainError(f"unknown method {method!r}; expected one of {METHODS}")

    if method == "linear_exact":
        if not isinstance(model, RidgeModel):
            raise ExplainError(f"linear_exact requires a bayesian_ridge model, got {model.kind}")
        values, base = _linear_shap(model, X.values, background.values)
        stderr = None
    elif method == "tree_exact":
        if not isinstance(model, (GbdtModel, ForestModel)):
            raise ExplainError(f"tree_exact requires a tree-ensemble model, got {model.kind}")
        values, base = _tree_shap(model, X.values, background.values)
        stderr = None
    else:
        values, base, stderr = _montecarlo_shap(
            model, X.values, background.values, mc_samples, seed
        )

    preds = model.predict_values(X.values)
    gap = float(np.max(np.abs(base + values.sum(axis=1) - preds))) if len(preds) else 0.0
    return ShapMatrix(
        row_ids=X.row_ids,
        names=X.names,
        groups=X.groups,
        values=values,
        base_value=base,
        method=method,
        background_size=background.n_rows,
        seed=seed,
        additivity_gap=gap,
        stderr=stderr,
    )


def _linear_shap(model: RidgeModel, X: np.ndarray, background: np.ndarray):
    mean_bg = background.mean(axis=0)
    values = (X - mean_bg) * model.coef
    base = float(mean_bg @ model.coef + model.intercept)
    return values, base


def _component_trees(model: TrainedModel) -> tuple[list[RegressionTree], list[float], float]:
    """Trees, per-tree output scales, and the constant offset of an ensemble."""
    if isinstance(model, GbdtModel):
        return model.trees, [model.learning_rate] * len(model.trees), model.init_value
    if isinstance(model, ForestModel):
        w = 1.0 / len(model.trees)
        return model.trees, [w] * len(model.trees), 0.0
    raise ExplainError(f"not a tree ensemble: {model.kind}")


@lru_cache(maxsize=None)
def _pair_weight(a: int, b: int) -> float:
    """(a-1)! b! / (a+b)!: the Shapley weight of a leaf with a x-wise and b
    background-wise path divergences, for each of its x-wise features."""
    if a + b <= 40:
        return math.factorial(a - 1) * math.factorial(b) / math.factorial(a + b)
    return math.exp(math.lgamma(a) + math.lgamma(b + 1) - math.lgamma(a + b + 1))


def _tree_shap(model: TrainedModel, X: np.ndarray, background: np.ndarray):
    trees, scales, _offset = _component_trees(model)
    n_bg = len(background)
    values = np.zeros((len(X), X.shape[1]))
    full_mask = (1 << n_bg) - 1
    for tree, scale in zip(trees, scales):
        state = _prepare_tree(tree, background)
        for r in range(len(X)):
            _tree_shap_row(state, X[r], full_mask, values[r], scale / n_bg)
    base = float(np.mean(model.predict_values(background)))
    return values, base


def _prepare_tree(tree: RegressionTree, background: np.ndarray):
    """Plain-list tree arrays plus, per node, a bitmask of the background
    rows routed left. Bitmask set arithmetic keeps the recursion off numpy."""
    feature = tree.feature.tolist()
    threshold = tree.threshold.tolist()
    bg_left_mask = [0] * tree.n_nodes
    for node, f in enumerate(feature):
        if f == -1:
            continue
        bits = np.packbits(
            (background[:, f] <= threshold[node]).astype(np.uint8), bitorder="little"
        ).tobytes()
        bg_left_mask[node] = int.from_bytes(bits, "little")
    return feature, threshold, tree.left.tolist(), tree.right.tolist(), tree.value.tolist(), bg_left_mask


def _tree_shap_row(state, x, full_mask: int, phi, leaf_scale: float) -> None:
    """Exact interventional Shapley contributions of one tree for one row.

    The recursion tracks, along each root-to-leaf path, which features were
    routed x-wise (``a_feats``) and which background-wise (``b_feats``) where
    x and a background row diverge, carrying the set of background rows that
    share the divergence pattern (as a bitmask). A leaf reached with a
    x-wise and b background-wise divergences contributes its value with the
    closed-form Shapley weights (a-1)! b! / (a+b)! (positively, to each
    x-wise feature) and a! (b-1)! / (a+b)! (negatively, to each
    background-wise feature)."""
    feature, threshold, left, right, value, bg_left_mask = state

    def recurse(node: int, mask: int, a_feats: tuple[int, ...], b_feats: tuple[int, ...]):
        f = feature[node]
        if f == -1:
            a, b = len(a_feats), len(b_feats)
            if a + b == 0:
                return
            leaf = value[node] * leaf_scale * mask.bit_count()
            if a:
                w = leaf * _pair_weight(a, b)
                for g in a_feats:
                    phi[g] += w
            if b:
                w = leaf * _pair_weight(b, a)
                for g in b_feats:
                    phi[g] -= w
            return

        x_left = x[f] <= threshold[node]
        x_child = left[node] if x_left else right[node]

        if f in a_feats:
            # this feature already diverged x-wise: the path is pinned to x
            recurse(x_child, mask, a_feats, b_feats)
            return
        bgl = bg_left_mask[node]
        if f in b_feats:
            # already diverged background-wise: rows follow their own values
            li = mask & bgl
            ri = mask & ~bgl
            if li:
                recurse(left[node], li, a_feats, b_feats)
            if ri:
                recurse(right[node], ri, a_feats, b_feats)
            return

        x_side = bgl if x_left else (full_mask & ~bgl)
        same = mask & x_side
        diff = mask & ~x_side
        if same:
            recurse(x_child, same, a_feats, b_feats)
        if diff:
            other_child = right[node] if x_left else left[node]
            recurse(x_child, diff, a_feats + (f,), b_feats)
            recurse(other_child, diff, a_feats, b_feats + (f,))

    recurse(0, full_mask, (), ())


def _montecarlo_shap(
    model: TrainedModel,
    X: np.ndarray,
    background: np.ndarray,
    mc_samples: int,
    seed: int,
):
    """Permutation-sampling Shapley: each sample draws a background row and a
    feature order, then flips features to x one at a time; the prediction
    deltas are unbiased per-feature marginal contributions."""
    if mc_samples < 2:
        raise ExplainError(f"montecarlo needs at least 2 samples, got {mc_samples}")
    n_rows, d = X.shape
    n_bg = len(background)
    values = np.zeros((n_rows, d))
    stderr = np.zeros((n_rows, d))
    chunk_rows = max(1, 4_000_000 // max(d, 1))

    for r in range(n_rows):
        rng = np.random.default_rng(np.random.SeedSequence([seed, r]))
        x = X[r]
        contribs = np.zeros((mc_samples, d))
        pending: list[np.ndarray] = []
        pending_meta: list[tuple[int, np.ndarray]] = []

        def flush():
            if not pending:
                return
            preds = model.predict_values(np.vstack(pending))
            offset = 0
            for k, order in pending_meta:
                chain = preds[offset : offset + d + 1]
                offset += d + 1
                contribs[k, order] = np.diff(chain)
            pending.clear()
            pending_meta.clear()

        for k in range(mc_samples):
            z = background[rng.integers(0, n_bg)]
            order = rng.permutation(d)
            chain = np.tile(z, (d + 1, 1))
            for t, f in enumerate(order):
                chain[t + 1 :, f] = x[f]
            pending.append(chain)
            pending_meta.append((k, order))
            if sum(len(p) for p in pending) >= chunk_rows:
                flush()
        flush()
        values[r] = contribs.mean(axis=0)
        stderr[r] = contribs.std(axis=0, ddof=1) / math.sqrt(mc_samples)

    base = float(np.mean(model.predict_values(background)))
    return values, base, stderr


def shap_bruteforce(model: TrainedModel, x, background: FeatureMatrix) -> np.ndarray:
    """Exact interventional Shapley values by enumerating all 2^d coalitions.

    For each coalition S the payoff v(S) is the model output averaged over
    background completions of the features outside S. Only feasible for
    d <= 12 features."""
    x = np.asarray(x, dtype=float).ravel()
    d = len(x)
    if d != len(background.names):
        raise ExplainError(f"row has {d} features but background has {len(background.names)}")
    if d > 12:
        raise ExplainError(f"brute force limited to 12 features, got {d}")
    if background.n_rows == 0:
        raise ExplainError("background set is empty")

    bg = background.values
    n_bg = len(bg)
    n_masks = 1 << d
    v = np.zeros(n_masks)
    batch: list[np.ndarray] = []
    masks: list[int] = []

    def flush():
        if not batch:
            return
        preds = model.predict_values(np.vstack(batch))
        for t, mask in enumerate(masks):
            v[mask] = preds[t * n_bg : (t + 1) * n_bg].mean()
        batch.clear()
        masks.clear()

    for mask in range(n_masks):
        rows = bg.copy()
        for f in range(d):
            if mask >> f & 1:
                rows[:, f] = x[f]
        batch.append(rows)
        masks.append(mask)
        if len(batch) * n_bg >= 200_000:
            flush()
    flush()

    fact = [math.factorial(k) for k in range(d + 1)]
    weights = [fact[s] * fact[d - s - 1] / fact[d] for s in range(d)]
    phi = np.zeros(d)
    for f in range(d):
        bit = 1 << f
        for mask in range(n_masks):
            if mask & bit:
                continue
            s = bin(mask).count("1")
            phi[f] += weights[s] * (v[mask | bit] - v[mask])
    return phi
