"""Metrics (RMSE, R-squared), category snapping, and the representation x
model benchmark grid."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from . import features as feat
from . import textprep
from .corpus import Corpus, split
from .features import EmbeddingTable, FeatureMatrix, LookupTables, assemble
from .models import RegressorSpec, fit

__all__ = [
    "EvalError",
    "Metrics",
    "GridCell",
    "GridResult",
    "GridConfig",
    "SNAPPED_LABELS",
    "rmse",
    "r2",
    "snap_to_category",
    "snapped_accuracy",
    "cell_seed",
    "run_grid",
]

REPRESENTATIONS = ("tfidf", "embedding_a", "embedding_b")

# Stage names after snapping; the two zero-score stages are indistinguishable.
SNAPPED_LABELS = ("Blocked/Withdrawn", "Announced", "Tabled", "CloseToAdoption", "AdoptedCompleted")


class EvalError(ValueError):
    """Invalid evaluation inputs."""


def _as_vectors(y, yhat) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=float).ravel()
    yhat = np.asarray(yhat, dtype=float).ravel()
    if len(y) != len(yhat):
        raise EvalError(f"length mismatch: {len(y)} targets vs {len(yhat)} predictions")
    if len(y) == 0:
        raise EvalError("empty inputs")
    return y, yhat


def rmse(y, yhat) -> float:
    y, yhat = _as_vectors(y, yhat)
    return float(np.sqrt(np.mean((y - yhat) ** 2)))


def r2(y, yhat) -> float:
    y, yhat = _as_vectors(y, yhat)
    if len(y) < 2:
        raise EvalError("R-squared needs at least 2 points")
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        raise EvalError("R-squared is undefined for constant targets")
    ss_res = float(np.sum((y - yhat) ** 2))
    return 1.0 - ss_res / ss_tot


def snap_to_category(yhat: float) -> str:
    """Clamp to [0, 1] and snap to the nearest stage score; exact midpoints
    round toward the lower stage. The 0 score renders as Blocked/Withdrawn."""
    if not np.isfinite(yhat):
        raise EvalError(f"cannot snap non-finite prediction {yhat!r}")
    v = min(max(float(yhat), 0.0), 1.0)
    idx = int(v / 0.25)
    if idx >= 4:
        return SNAPPED_LABELS[4]
    if v - idx * 0.25 > 0.125:
        idx += 1
    return SNAPPED_LABELS[idx]


def snapped_accuracy(y, yhat) -> float:
    """Share of predictions landing on the true stage after snapping.

    Supplementary diagnostic only; RMSE and R-squared are the primary
    metrics because they respect the ordinal scale."""
    y, yhat = _as_vectors(y, yhat)
    hits = sum(snap_to_category(a) == snap_to_category(b) for a, b in zip(y, yhat))
    return hits / len(y)


@dataclass(frozen=True)
class Metrics:
    rmse: float
    r2: float
    n: int


@dataclass(frozen=True)
class GridCell:
    representation: str
    model_kind: str
    with_metadata: bool
    metrics: Metrics
    accuracy: float
    seed: int

    @property
    def key(self) -> tuple:
        return (self.representation, self.model_kind, self.with_metadata)


@dataclass(frozen=True)
class GridResult:
    rows: tuple[GridCell, ...]

    def __post_init__(self):
        keys = [cell.key for cell in self.rows]
        if len(set(keys)) != len(keys):
            raise EvalError("duplicate (representation, model, with_metadata) cells")

    def best(self, with_metadata: bool | None = None) -> GridCell:
        rows = [c for c in self.rows if with_metadata is None or c.with_metadata == with_metadata]
        if not rows:
            raise EvalError("no grid rows match")
        return min(rows, key=lambda c: (c.metrics.rmse, -c.metrics.r2))


@dataclass
class GridConfig:
    """Everything run_grid needs besides the corpus itself."""

    ratio: float = 0.2
    seed: int = 42
    stratified: bool = True
    min_df: int = 2
    max_features: int | None = None
    representations: tuple[str, ...] = ("tfidf",)
    embeddings: dict[str, EmbeddingTable] = field(default_factory=dict)  # name -> table
    lookups: LookupTables = field(default_factory=lambda: LookupTables({}, {}))
    model_kinds: tuple[str, ...] = ("bayesian_ridge", "random_forest", "gbdt", "svr")
    hyperparameters: dict[str, dict] = field(default_factory=dict)  # kind -> overrides
    jobs: int = 1


def cell_seed(seed: int, *key_parts) -> int:
    """Stable per-cell seed derived from the global seed and the cell key."""
    digest = hashlib.sha256(("|".join(str(p) for p in (seed,) + key_parts)).encode()).digest()
    return int.from_bytes(digest[:8], "big")


def grid_features(corpus: Corpus, config: GridConfig):
    """Shared featurization for the grid: one split, per-representation
    train/test blocks, and the metadata blocks. Returns
    (blocks, meta_train, meta_test, y_train, y_test) with blocks keyed by
    representation name."""
    for name in config.representations:
        if name not in REPRESENTATIONS:
            raise EvalError(f"unknown representation {name!r}; expected one of {REPRESENTATIONS}")
        if name != "tfidf" and name not in config.embeddings:
            raise EvalError(f"representation {name!r} requested but no embedding sidecar is loaded")

    indices = split(corpus, ratio=config.ratio, seed=config.seed, stratified=config.stratified)
    train_set, test_set = set(indices.train_ids), set(indices.test_ids)
    train = [rec for rec in corpus if rec.id in train_set]
    test = [rec for rec in corpus if rec.id in test_set]
    y_train = np.array([rec.stage_value for rec in train])
    y_test = np.array([rec.stage_value for rec in test])

    blocks: dict[str, tuple[FeatureMatrix, FeatureMatrix]] = {}
    if "tfidf" in config.representations:
        train_docs = textprep.prepare_corpus(train)
        test_docs = textprep.prepare_corpus(test)
        tfidf = feat.fit_tfidf(train_docs, min_df=config.min_df, max_features=config.max_features)
        blocks["tfidf"] = (
            feat.transform_tfidf(tfidf, train_docs),
            feat.transform_tfidf(tfidf, test_docs),
        )
    for name in config.representations:
        if name == "tfidf":
            continue
        table = config.embeddings[name]
        blocks[name] = (
            feat.embedding_matrix(table, indices.train_ids),
            feat.embedding_matrix(table, indices.test_ids),
        )

    schema = feat.fit_metadata_schema(train, config.lookups)
    meta_train = feat.encode_metadata(train, schema)
    meta_test = feat.encode_metadata(test, schema)
    return blocks, meta_train, meta_test, y_train, y_test


def _cell_matrices(blocks, meta_train, meta_test, rep: str, with_metadata: bool):
    rep_train, rep_test = blocks[rep]
    if with_metadata:
        return (
            assemble([rep_train, meta_train], [rep, "meta"]),
            assemble([rep_test, meta_test], [rep, "meta"]),
        )
    return rep_train, rep_test


def run_grid(corpus: Corpus, config: GridConfig) -> GridResult:
    """Fit every requested representation x model kind x metadata setting on
    one shared split and score the held-out records. Cells are independent
    and may run concurrently (``config.jobs``); the result order and values
    are identical either way."""
    blocks, meta_train, meta_test, y_train, y_test = grid_features(corpus, config)

    tasks = [
        (rep, kind, with_metadata)
        for rep in [r for r in REPRESENTATIONS if r in blocks]
        for kind in config.model_kinds
        for with_metadata in (False, True)
    ]

    def run_cell(task) -> GridCell:
        rep, kind, with_metadata = task
        X_train, X_test = _cell_matrices(blocks, meta_train, meta_test, rep, with_metadata)
        seed = cell_seed(config.seed, rep, kind, with_metadata)
        spec = RegressorSpec(kind, config.hyperparameters.get(kind, {}), seed=seed)
        model = fit(spec, X_train, y_train)
        yhat = model.predict(X_test)
        return GridCell(
            representation=rep,
            model_kind=kind,
            with_metadata=with_metadata,
            metrics=Metrics(rmse=rmse(y_test, yhat), r2=r2(y_test, yhat), n=len(y_test)),
            accuracy=snapped_accuracy(y_test, yhat),
            seed=seed,
        )

    if config.jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            cells = list(pool.map(run_cell, tasks))
    else:
        cells = [run_cell(task) for task in tasks]
    cells.sort(key=lambda c: (REPRESENTATIONS.index(c.representation), c.model_kind, c.with_metadata))
    return GridResult(tuple(cells))
