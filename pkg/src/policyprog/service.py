"""HTTP service exposing the pipeline: validation, synthetic corpora, the
benchmark grid, attributions, and full runs.

The service wraps exactly the same runner stages as the command line; inline
records go through the same domain validation as JSONL files. Heavy
endpoints accept flat config overrides per request.
"""

from __future__ import annotations

from typing import Any

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__, report as report_mod, runner
from .corpus import Corpus, CorpusError, CorpusValidationError, record_from_obj
from .evaluate import run_grid
from .explain import ExplainError
from .features import FeatureError
from .models import ModelError

__all__ = ["create_app", "app"]


class RapporteurIn(BaseModel):
    name: str
    country: str
    party: str | None = None


class PolicyRecordIn(BaseModel):
    id: str
    title: str
    text: str
    stage: str
    month: int
    year: int
    rapporteurs: list[RapporteurIn] = Field(default_factory=list)
    spotlight: str | None = None
    procedure_type: str | None = None
    procedure_year: int | None = None
    legislative: bool = False
    sidecar_scores: dict[str, float] = Field(default_factory=dict)


class CorpusPayload(BaseModel):
    """Either inline records or a server-local corpus path."""

    records: list[PolicyRecordIn] | None = None
    corpus_path: str | None = None
    config: dict[str, Any] = Field(default_factory=dict)


class HealthResponse(BaseModel):
    status: str
    version: str


class ProvenanceResponse(BaseModel):
    data_files: dict[str, str]
    config_hash: str


class ValidateResponse(BaseModel):
    valid: bool
    n_records: int
    stage_histogram: dict[str, int]
    errors: list[str]


class SynthRequest(BaseModel):
    n: int
    vocab_size: int = 200
    seed: int | None = None


class SynthResponse(BaseModel):
    n_records: int
    jsonl: str


class GridCellOut(BaseModel):
    representation: str
    model: str
    with_metadata: bool
    rmse: float
    r2: float
    accuracy: float
    n: int
    seed: int


class GridResponse(BaseModel):
    rows: list[GridCellOut]
    markdown: str
    csv: str


class ImportanceEntryOut(BaseModel):
    feature: str
    group: str
    importance: float
    std: float


class ExplainResponse(BaseModel):
    run_dir: str
    importance_model: str
    shap_model: str
    importance: list[ImportanceEntryOut]
    shap_base_value: float
    shap_method: str
    importance_svg: str
    shap_svg: str


class RunResponse(BaseModel):
    run_dir: str
    n_records: int
    best: dict[str, Any]
    files: list[str]


def _merge_config(base: runner.RunConfig, overrides: dict[str, Any]) -> runner.RunConfig:
    merged = dict(base.values)
    merged.update(overrides)
    try:
        return runner.RunConfig.build(overrides=merged)
    except runner.ConfigError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


def _corpus_from_payload(payload: CorpusPayload, cfg: runner.RunConfig) -> Corpus:
    if payload.records is not None and payload.corpus_path is not None:
        raise HTTPException(status_code=422, detail="pass either records or corpus_path, not both")
    try:
        if payload.records is not None:
            records = tuple(
                record_from_obj(rec.model_dump(), where=f"record {i}")
                for i, rec in enumerate(payload.records)
            )
            return Corpus(records)
        if payload.corpus_path is not None:
            cfg.values["corpus"] = payload.corpus_path
        return runner.load_corpus(cfg)
    except (CorpusError, runner.ConfigError) as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


def create_app(base_cfg: runner.RunConfig | None = None) -> FastAPI:
    cfg0 = base_cfg or runner.RunConfig.build()
    app = FastAPI(
        title="policyprog",
        version=__version__,
        description="Predicts legislative progression stages of climate policies and explains the predictions.",
    )

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.get("/provenance", response_model=ProvenanceResponse)
    def provenance() -> ProvenanceResponse:
        info = runner.provenance(cfg0)
        return ProvenanceResponse(data_files=info["data_files"], config_hash=info["config_hash"])

    @app.post("/validate", response_model=ValidateResponse)
    def validate(payload: CorpusPayload) -> ValidateResponse:
        cfg = _merge_config(cfg0, payload.config)
        try:
            if payload.records is not None:
                records = tuple(
                    record_from_obj(rec.model_dump(), where=f"record {i}")
                    for i, rec in enumerate(payload.records)
                )
                corpus = Corpus(records)
            else:
                if payload.corpus_path is not None:
                    cfg.values["corpus"] = payload.corpus_path
                corpus = runner.load_corpus(cfg)
        except CorpusValidationError as exc:
            return ValidateResponse(valid=False, n_records=0, stage_histogram={}, errors=exc.errors)
        except (CorpusError, runner.ConfigError) as exc:
            return ValidateResponse(valid=False, n_records=0, stage_histogram={}, errors=[str(exc)])
        return ValidateResponse(
            valid=True,
            n_records=len(corpus),
            stage_histogram=corpus.stage_histogram(),
            errors=[],
        )

    @app.post("/synth", response_model=SynthResponse)
    def synth(request: SynthRequest) -> SynthResponse:
        from .corpus import generate_synthetic, serialize_corpus

        seed = request.seed if request.seed is not None else cfg0.seed()
        try:
            corpus = generate_synthetic(seed=seed, n=request.n, vocab_size=request.vocab_size)
        except CorpusError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return SynthResponse(n_records=len(corpus), jsonl=serialize_corpus(corpus))

    @app.post("/grid", response_model=GridResponse)
    def grid(payload: CorpusPayload) -> GridResponse:
        cfg = _merge_config(cfg0, payload.config)
        corpus = _corpus_from_payload(payload, cfg)
        try:
            result = run_grid(corpus, cfg.grid_config())
            markdown, csv_text = report_mod.render_grid(result)
        except (runner.ConfigError, FeatureError, ModelError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        rows = [
            GridCellOut(
                representation=c.representation,
                model=c.model_kind,
                with_metadata=c.with_metadata,
                rmse=c.metrics.rmse,
                r2=c.metrics.r2,
                accuracy=c.accuracy,
                n=c.metrics.n,
                seed=c.seed,
            )
            for c in result.rows
        ]
        return GridResponse(rows=rows, markdown=markdown, csv=csv_text)

    @app.post("/explain", response_model=ExplainResponse)
    def explain(payload: CorpusPayload) -> ExplainResponse:
        cfg = _merge_config(cfg0, payload.config)
        corpus = _corpus_from_payload(payload, cfg)
        try:
            run_dir = runner.new_run_dir(cfg)
            artifacts = runner.run_explain_stage(cfg, corpus, run_dir)
            svgs = runner.run_report_stage(cfg, run_dir, artifacts)
        except (runner.ConfigError, FeatureError, ModelError, ExplainError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        importance = report_mod.aggregate_embedding_importance(artifacts["importance"])
        return ExplainResponse(
            run_dir=str(run_dir),
            importance_model=artifacts["importance_model"],
            shap_model=artifacts["shap_model"],
            importance=[
                ImportanceEntryOut(feature=e.feature, group=e.group, importance=e.importance, std=e.std)
                for e in importance.sorted_entries()
            ],
            shap_base_value=artifacts["shap"].base_value,
            shap_method=artifacts["shap"].method,
            importance_svg=svgs["importance_svg"],
            shap_svg=svgs["shap_svg"],
        )

    @app.post("/run", response_model=RunResponse)
    def run_all(payload: CorpusPayload) -> RunResponse:
        cfg = _merge_config(cfg0, payload.config)
        if payload.records is not None:
            raise HTTPException(status_code=422, detail="/run requires corpus_path (results are tied to a file)")
        if payload.corpus_path is not None:
            cfg.values["corpus"] = payload.corpus_path
        try:
            summary = runner.run_all(cfg)
        except (CorpusError, runner.ConfigError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return RunResponse(**summary)

    return app


app = create_app()
