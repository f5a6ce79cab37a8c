"""Pipeline orchestration shared by the CLI and the HTTP service.

A RunConfig is a flat dict of dotted keys (``split.ratio``, ``tfidf.min_df``,
``models.gbdt.n_rounds``, ...) merged from defaults, an optional JSON config
file, and explicit overrides, in that order of increasing precedence. Every
run writes into a fresh directory named by timestamp and config hash; prior
runs are never overwritten.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import logging
import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from . import report as report_mod
from . import textprep
from .corpus import (
    Corpus,
    attach_sidecar_scores,
    generate_synthetic,
    load_sidecar_scores,
    parse_corpus,
    write_corpus,
)
from .evaluate import GridConfig, GridResult, REPRESENTATIONS, cell_seed, run_grid
from .explain import ImportanceReport, ShapMatrix, permutation_importance, shap
from .features import FeatureMatrix, LookupTables, load_embeddings, load_lookup_csv
from .models import DEFAULT_HYPERPARAMETERS, MODEL_KINDS, RegressorSpec, fit

__all__ = [
    "ConfigError",
    "RunConfig",
    "load_corpus",
    "run_validate",
    "run_synth",
    "run_grid_stage",
    "run_explain_stage",
    "run_report_stage",
    "run_all",
    "provenance",
    "synthetic_embeddings_csv",
]

log = logging.getLogger(__name__)

CONFIG_DEFAULTS: dict[str, object] = {
    "corpus": None,
    "sidecar_scores": None,
    "embeddings.a": None,
    "embeddings.b": None,
    "lookups.voting_weights": None,  # None -> bundled table
    "lookups.seat_shares": None,
    "representations": None,  # None -> tfidf plus configured embeddings
    "split.ratio": 0.2,
    "split.stratified": True,
    "tfidf.min_df": 2,
    "tfidf.max_features": None,
    "explain.repeats": 10,
    "explain.background": 100,
    "explain.mc_samples": 200,
    "explain.max_rows": 40,
    "report.top_k": 20,
    "seed": 42,
    "jobs": 1,
    "out": None,  # None -> $POLICYPROG_OUT or ./runs
}

_INT_KEYS = {
    "tfidf.min_df",
    "explain.repeats",
    "explain.background",
    "explain.mc_samples",
    "explain.max_rows",
    "report.top_k",
    "seed",
    "jobs",
}


class ConfigError(ValueError):
    """Invalid run configuration."""


@dataclass
class RunConfig:
    values: dict

    @classmethod
    def build(cls, config_file: str | Path | None = None, overrides: dict | None = None) -> "RunConfig":
        """Merge defaults < config file < overrides."""
        values = dict(CONFIG_DEFAULTS)
        for source_name, source in (("config file", _load_config_file(config_file)), ("override", overrides or {})):
            for key, value in source.items():
                if key not in CONFIG_DEFAULTS and not key.startswith("models."):
                    raise ConfigError(f"unknown {source_name} key {key!r}")
                values[key] = value
        cfg = cls(values)
        cfg._validate()
        return cfg

    def _validate(self) -> None:
        ratio = self.get("split.ratio")
        if not (isinstance(ratio, (int, float)) and 0.0 < float(ratio) < 1.0):
            raise ConfigError(f"split.ratio must lie in (0, 1), got {ratio!r}")
        for key in _INT_KEYS:
            value = self.get(key)
            if not isinstance(value, int) or isinstance(value, bool) or value < 0:
                raise ConfigError(f"{key} must be a non-negative integer, got {value!r}")
        for key in self.values:
            if key.startswith("models."):
                parts = key.split(".")
                if len(parts) != 3 or parts[1] not in MODEL_KINDS:
                    raise ConfigError(f"model override key {key!r} must look like models.<kind>.<param>")
                if parts[2] not in DEFAULT_HYPERPARAMETERS[parts[1]]:
                    raise ConfigError(f"unknown hyperparameter {parts[2]!r} for {parts[1]}")
        reps = self.get("representations")
        if reps is not None:
            if isinstance(reps, str):
                reps = [r.strip() for r in reps.split(",") if r.strip()]
                self.values["representations"] = reps
            bad = [r for r in reps if r not in REPRESENTATIONS]
            if bad:
                raise ConfigError(f"unknown representations {bad}; expected subset of {REPRESENTATIONS}")

    def get(self, key: str):
        return self.values.get(key, CONFIG_DEFAULTS.get(key))

    def seed(self) -> int:
        return int(self.get("seed"))

    def model_overrides(self) -> dict[str, dict]:
        out: dict[str, dict] = {}
        for key, value in self.values.items():
            if key.startswith("models."):
                _, kind, param = key.split(".")
                out.setdefault(kind, {})[param] = value
        return out

    def representations(self) -> tuple[str, ...]:
        reps = self.get("representations")
        if reps is None:
            reps = ["tfidf"]
            for name, key in (("embedding_a", "embeddings.a"), ("embedding_b", "embeddings.b")):
                if self.get(key):
                    reps.append(name)
        return tuple(reps)

    def out_root(self) -> Path:
        out = self.get("out") or os.environ.get("POLICYPROG_OUT") or "runs"
        return Path(out)

    def effective(self) -> dict:
        """The full flat config with defaults applied, for hashing/reporting."""
        merged = dict(CONFIG_DEFAULTS)
        merged.update(self.values)
        return merged

    def config_hash(self) -> str:
        canon = json.dumps(self.effective(), sort_keys=True, default=str)
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()

    def lookups(self) -> LookupTables:
        return LookupTables(
            voting_weights=_load_lookup(self.get("lookups.voting_weights"), "voting_weights.csv"),
            seat_shares=_load_lookup(self.get("lookups.seat_shares"), "seat_shares.csv"),
        )

    def grid_config(self) -> GridConfig:
        embeddings = {}
        for name in self.representations():
            if name == "tfidf":
                continue
            key = f"embeddings.{name.rsplit('_', 1)[1]}"
            path = self.get(key)
            if not path:
                raise ConfigError(
                    f"representation {name!r} requested but no sidecar path is configured ({key})"
                )
            if not Path(path).is_file():
                raise ConfigError(f"embedding sidecar not found: {path}")
            embeddings[name] = load_embeddings(path)
        max_features = self.get("tfidf.max_features")
        return GridConfig(
            ratio=float(self.get("split.ratio")),
            seed=self.seed(),
            stratified=bool(self.get("split.stratified")),
            min_df=int(self.get("tfidf.min_df")),
            max_features=int(max_features) if max_features is not None else None,
            representations=self.representations(),
            embeddings=embeddings,
            lookups=self.lookups(),
            hyperparameters=self.model_overrides(),
            jobs=int(self.get("jobs")),
        )


def _load_config_file(path: str | Path | None) -> dict:
    if path is None:
        return {}
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc.msg}") from exc
    if not isinstance(obj, dict):
        raise ConfigError(f"config file {path} must hold a JSON object of flat dotted keys")
    return obj


def _load_lookup(path: str | None, bundled: str) -> dict[str, float]:
    if path:
        return load_lookup_csv(path)
    with resources.as_file(resources.files("policyprog.data").joinpath(bundled)) as p:
        return load_lookup_csv(p)


def provenance(cfg: RunConfig | None = None) -> dict:
    out = {"data_files": textprep.data_file_hashes()}
    if cfg is not None:
        out["config_hash"] = cfg.config_hash()
    return out


# ---------------------------------------------------------------------------
# Stages
# ---------------------------------------------------------------------------


def load_corpus(cfg: RunConfig) -> Corpus:
    path = cfg.get("corpus")
    if not path:
        raise ConfigError("no corpus path configured (key 'corpus')")
    corpus = parse_corpus(path)
    sidecar = cfg.get("sidecar_scores")
    if sidecar:
        if not Path(sidecar).is_file():
            raise ConfigError(f"sidecar-score file not found: {sidecar}")
        corpus = attach_sidecar_scores(corpus, load_sidecar_scores(sidecar))
    return corpus


def run_validate(cfg: RunConfig) -> dict:
    corpus = load_corpus(cfg)
    return {
        "corpus": str(cfg.get("corpus")),
        "n_records": len(corpus),
        "stage_histogram": corpus.stage_histogram(),
    }


def synthetic_embeddings_csv(corpus: Corpus, dim: int, seed: int, tag: str) -> str:
    """Deterministic pseudo-embeddings for exercising the embedding path
    without a real encoder: a fixed random projection of token counts."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, dim]))
    docs = textprep.prepare_corpus(corpus)
    vocab = sorted({t for d in docs for t in d.tokens})
    index = {t: i for i, t in enumerate(vocab)}
    proj = rng.normal(size=(len(vocab), dim)) / np.sqrt(dim)
    lines = [f"# encoder={tag} pooling=projection dim={dim} seed={seed}"]
    lines.append("policy_id," + ",".join(f"e{i}" for i in range(dim)))
    for doc in docs:
        counts = np.zeros(len(vocab))
        for t in doc.tokens:
            counts[index[t]] += 1.0
        norm = np.linalg.norm(counts)
        if norm > 0:
            counts /= norm
        vec = counts @ proj
        lines.append(doc.id + "," + ",".join(f"{v:.8f}" for v in vec))
    return "\n".join(lines) + "\n"


def run_synth(
    cfg: RunConfig,
    n: int,
    vocab_size: int = 200,
    output: str | Path = "synthetic.jsonl",
    emit_embeddings: bool = False,
) -> dict:
    corpus = generate_synthetic(seed=cfg.seed(), n=n, vocab_size=vocab_size)
    output = Path(output)
    output.parent.mkdir(parents=True, exist_ok=True)
    write_corpus(corpus, output)
    written = {"corpus": str(output), "n_records": len(corpus)}
    if emit_embeddings:
        for tag, letter in (("embedding_a", "a"), ("embedding_b", "b")):
            path = output.with_name(output.stem + f".{tag}.csv")
            path.write_text(
                synthetic_embeddings_csv(corpus, dim=16, seed=cfg.seed() + (1 if letter == "a" else 2), tag=tag),
                encoding="utf-8",
            )
            written[tag] = str(path)
    return written


def new_run_dir(cfg: RunConfig) -> Path:
    root = cfg.out_root()
    root.mkdir(parents=True, exist_ok=True)
    stamp = _dt.datetime.now(_dt.timezone.utc).strftime("%Y%m%d-%H%M%S")
    base = f"{stamp}-{cfg.config_hash()[:8]}"
    candidate = root / base
    k = 0
    while candidate.exists():
        k += 1
        candidate = root / f"{base}-{k}"
    candidate.mkdir()
    return candidate


def run_grid_stage(cfg: RunConfig, corpus: Corpus, run_dir: Path) -> GridResult:
    result = run_grid(corpus, cfg.grid_config())
    md, csv_text = report_mod.render_grid(result)
    (run_dir / "grid.csv").write_text(csv_text, encoding="utf-8")
    (run_dir / "grid.md").write_text(md, encoding="utf-8")
    return result


def _explain_matrices(cfg: RunConfig, corpus: Corpus, representation: str, with_metadata: bool):
    """Train/test matrices for one representation, mirroring the grid split."""
    from .evaluate import grid_features, _cell_matrices

    grid_cfg = cfg.grid_config()
    if representation not in grid_cfg.representations:
        raise ConfigError(f"representation {representation!r} is not available in this run")
    grid_cfg.representations = (representation,)
    blocks, meta_train, meta_test, y_train, y_test = grid_features(corpus, grid_cfg)
    X_train, X_test = _cell_matrices(blocks, meta_train, meta_test, representation, with_metadata)
    return X_train, X_test, y_train, y_test


def run_explain_stage(
    cfg: RunConfig,
    corpus: Corpus,
    run_dir: Path,
    grid_result: GridResult | None = None,
) -> dict:
    """Permutation importance for the strongest model, plus Shapley values on
    the boosted-tree/TF-IDF combination whose text features stay readable.

    Returns the in-memory artifacts for the report stage."""
    seed = cfg.seed()
    meta_available = True
    if grid_result is not None and grid_result.rows:
        best = grid_result.best(with_metadata=meta_available)
        imp_rep, imp_kind, imp_meta = best.representation, best.model_kind, best.with_metadata
    else:
        imp_rep, imp_kind, imp_meta = "tfidf", "bayesian_ridge", True

    overrides = cfg.model_overrides()

    # permutation importance on the chosen model over the held-out records
    X_train, X_test, y_train, y_test = _explain_matrices(cfg, corpus, imp_rep, imp_meta)
    imp_spec = RegressorSpec(imp_kind, overrides.get(imp_kind, {}), seed=cell_seed(seed, imp_rep, imp_kind, imp_meta))
    imp_model = fit(imp_spec, X_train, y_train)
    importance = permutation_importance(
        imp_model, X_test, y_test, repeats=int(cfg.get("explain.repeats")), seed=seed
    )
    (run_dir / "importance.csv").write_text(importance.to_csv(), encoding="utf-8")

    # Shapley values on the tree ensemble with TF-IDF features
    X_train, X_test, y_train, y_test = _explain_matrices(cfg, corpus, "tfidf", meta_available)
    shap_spec = RegressorSpec("gbdt", overrides.get("gbdt", {}), seed=cell_seed(seed, "tfidf", "gbdt", meta_available))
    shap_model = fit(shap_spec, X_train, y_train)

    rng = np.random.default_rng(np.random.SeedSequence([seed, 77]))
    bg_size = min(int(cfg.get("explain.background")), X_train.n_rows)
    bg_rows = sorted(rng.choice(X_train.n_rows, size=bg_size, replace=False).tolist())
    background = FeatureMatrix(
        tuple(X_train.row_ids[i] for i in bg_rows),
        X_train.names,
        X_train.groups,
        X_train.values[bg_rows],
    )
    max_rows = min(int(cfg.get("explain.max_rows")), X_test.n_rows)
    probe_rows = sorted(rng.choice(X_test.n_rows, size=max_rows, replace=False).tolist())
    probe = FeatureMatrix(
        tuple(X_test.row_ids[i] for i in probe_rows),
        X_test.names,
        X_test.groups,
        X_test.values[probe_rows],
    )
    shap_matrix = shap(
        shap_model,
        probe,
        background,
        mc_samples=int(cfg.get("explain.mc_samples")),
        seed=seed,
    )
    (run_dir / "shap.csv").write_text(report_mod.shap_long_csv(shap_matrix, probe), encoding="utf-8")

    artifacts = {
        "importance": importance,
        "importance_model": f"{imp_rep}+{imp_kind}" + ("+metadata" if imp_meta else ""),
        "shap": shap_matrix,
        "shap_features": probe,
        "shap_model": "tfidf+gbdt" + ("+metadata" if meta_available else ""),
    }
    return artifacts


def run_report_stage(cfg: RunConfig, run_dir: Path, artifacts: dict) -> dict:
    top_k = int(cfg.get("report.top_k"))
    importance: ImportanceReport = artifacts["importance"]
    shap_matrix: ShapMatrix = artifacts["shap"]
    probe: FeatureMatrix = artifacts["shap_features"]

    imp_svg = report_mod.render_importance_chart(
        importance,
        report_mod.ChartSpec(title=f"Permutation importance ({artifacts.get('importance_model', '')})", top_k=top_k),
    )
    shap_svg = report_mod.render_shap_summary(
        shap_matrix,
        probe,
        report_mod.ChartSpec(title=f"Shapley summary ({artifacts.get('shap_model', '')})", top_k=top_k),
    )
    (run_dir / "importance.svg").write_text(imp_svg, encoding="utf-8")
    (run_dir / "shap_summary.svg").write_text(shap_svg, encoding="utf-8")
    return {"importance_svg": str(run_dir / "importance.svg"), "shap_svg": str(run_dir / "shap_summary.svg")}


def run_all(cfg: RunConfig) -> dict:
    """validate -> grid -> explain -> report, in one fresh run directory."""
    corpus = load_corpus(cfg)
    run_dir = new_run_dir(cfg)
    (run_dir / "config.json").write_text(
        json.dumps(cfg.effective(), sort_keys=True, indent=2, default=str), encoding="utf-8"
    )
    grid_result = run_grid_stage(cfg, corpus, run_dir)
    artifacts = run_explain_stage(cfg, corpus, run_dir, grid_result)
    run_report_stage(cfg, run_dir, artifacts)
    best = grid_result.best()
    return {
        "run_dir": str(run_dir),
        "n_records": len(corpus),
        "best": {
            "representation": best.representation,
            "model": best.model_kind,
            "with_metadata": best.with_metadata,
            "rmse": best.metrics.rmse,
            "r2": best.metrics.r2,
        },
        "files": sorted(p.name for p in run_dir.iterdir()),
    }
