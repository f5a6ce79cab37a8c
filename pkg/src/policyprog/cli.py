"""Command-line entry point; a thin client over the runner stages.

Exit codes: 0 success, 1 validation/configuration errors, 2 runtime errors,
64 usage errors. All randomness flows from one ``--seed``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__, report as report_mod, runner
from .corpus import CorpusError, CorpusValidationError
from .evaluate import EvalError
from .explain import ExplainError
from .features import FeatureError
from .models import ConvergenceError, ModelError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2
EXIT_USAGE = 64

_VALIDATION_ERRORS = (CorpusValidationError, CorpusError, runner.ConfigError, FeatureError)
_RUNTIME_ERRORS = (EvalError, ExplainError, ModelError, ConvergenceError, OSError, ValueError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); remap to 64
        raise UsageError(message)


def _add_common(parser: argparse.ArgumentParser, suppress: bool) -> None:
    """Global flags, accepted both before and after the subcommand."""
    d = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=d, help="JSON config file of flat dotted keys")
    parser.add_argument("--seed", type=int, default=d, help="global random seed (default 42)")
    parser.add_argument("--corpus", default=d, help="JSONL corpus path")
    parser.add_argument("--out", default=d, help="output root for run directories")
    parser.add_argument("--jobs", type=int, default=d, help="concurrent grid cells")
    parser.add_argument(
        "--set",
        dest="sets",
        action="append",
        default=argparse.SUPPRESS if suppress else [],
        metavar="KEY=VALUE",
        help="override any config key (repeatable), e.g. --set models.gbdt.n_rounds=100",
    )
    parser.add_argument(
        "--provenance",
        action="store_true",
        default=argparse.SUPPRESS if suppress else False,
        help="print data-file hashes and the config hash, then exit",
    )


def _build_parser() -> _Parser:
    parser = _Parser(prog="policyprog", description="Climate policy progression pipeline")
    parser.add_argument("--version", action="version", version=f"policyprog {__version__}")
    _add_common(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def subparser(name: str, help_text: str):
        p = sub.add_parser(name, help=help_text)
        _add_common(p, suppress=True)
        return p

    subparser("validate", "parse and validate a corpus, print a summary")

    synth = subparser("synth", "generate a synthetic planted-signal corpus")
    synth.add_argument("--n", type=int, required=True, help="number of records (>= 20)")
    synth.add_argument("--vocab-size", type=int, default=200)
    synth.add_argument("--output", default="synthetic.jsonl")
    synth.add_argument(
        "--emit-embeddings",
        action="store_true",
        help="also write deterministic embedding sidecars next to the corpus",
    )

    grid = subparser("grid", "run the representation x model benchmark grid")
    grid.add_argument(
        "--representation",
        action="append",
        dest="representations",
        help="restrict to one or more representations",
    )

    subparser("explain", "permutation importance and Shapley values")

    report = subparser("report", "render charts from a previous run directory")
    report.add_argument("--from-run", required=True, help="run directory holding importance.csv / shap.csv")

    subparser("all", "validate, grid, explain, and report in one run")

    serve = subparser("serve", "start the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def _parse_set(value: str) -> tuple[str, object]:
    if "=" not in value:
        raise UsageError(f"--set expects KEY=VALUE, got {value!r}")
    key, raw = value.split("=", 1)
    try:
        parsed = json.loads(raw)
    except json.JSONDecodeError:
        parsed = raw
    return key.strip(), parsed


def _config_from_args(args) -> runner.RunConfig:
    overrides: dict[str, object] = {}
    for item in args.sets:
        key, value = _parse_set(item)
        overrides[key] = value
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.corpus is not None:
        overrides["corpus"] = args.corpus
    if args.out is not None:
        overrides["out"] = args.out
    if args.jobs is not None:
        overrides["jobs"] = args.jobs
    if getattr(args, "representations", None):
        overrides["representations"] = list(args.representations)
    return runner.RunConfig.build(config_file=args.config, overrides=overrides)


def _cmd_validate(cfg, args) -> int:
    summary = runner.run_validate(cfg)
    print(f"corpus: {summary['corpus']}")
    print(f"records: {summary['n_records']}")
    for stage, count in summary["stage_histogram"].items():
        print(f"  {stage}: {count}")
    return EXIT_OK


def _cmd_synth(cfg, args) -> int:
    written = runner.run_synth(
        cfg,
        n=args.n,
        vocab_size=args.vocab_size,
        output=args.output,
        emit_embeddings=args.emit_embeddings,
    )
    for key, value in written.items():
        print(f"{key}: {value}")
    return EXIT_OK


def _cmd_grid(cfg, args) -> int:
    corpus = runner.load_corpus(cfg)
    run_dir = runner.new_run_dir(cfg)
    result = runner.run_grid_stage(cfg, corpus, run_dir)
    print(f"run_dir: {run_dir}")
    print((run_dir / "grid.md").read_text(encoding="utf-8"))
    best = result.best()
    print(f"best: {best.representation}+{best.model_kind} rmse={best.metrics.rmse:.4f} r2={best.metrics.r2:.4f}")
    return EXIT_OK


def _cmd_explain(cfg, args) -> int:
    corpus = runner.load_corpus(cfg)
    run_dir = runner.new_run_dir(cfg)
    artifacts = runner.run_explain_stage(cfg, corpus, run_dir)
    runner.run_report_stage(cfg, run_dir, artifacts)
    print(f"run_dir: {run_dir}")
    top = report_mod.aggregate_embedding_importance(artifacts["importance"]).sorted_entries()[:10]
    print(f"top features by permutation importance ({artifacts['importance_model']}):")
    for entry in top:
        print(f"  {entry.feature:<32} {entry.importance:+.5f} ({entry.group})")
    return EXIT_OK


def _cmd_report(cfg, args) -> int:
    src = Path(args.from_run)
    importance_path = src / "importance.csv"
    shap_path = src / "shap.csv"
    if not importance_path.is_file() or not shap_path.is_file():
        raise runner.ConfigError(f"{src} does not contain importance.csv and shap.csv")
    importance = report_mod.load_importance_csv(importance_path.read_text(encoding="utf-8"))
    shap_matrix, shap_features = report_mod.load_shap_csv(shap_path.read_text(encoding="utf-8"))
    run_dir = runner.new_run_dir(cfg)
    artifacts = {
        "importance": importance,
        "shap": shap_matrix,
        "shap_features": shap_features,
        "importance_model": "from saved run",
        "shap_model": "from saved run",
    }
    paths = runner.run_report_stage(cfg, run_dir, artifacts)
    for key, value in paths.items():
        print(f"{key}: {value}")
    return EXIT_OK


def _cmd_all(cfg, args) -> int:
    summary = runner.run_all(cfg)
    print(f"run_dir: {summary['run_dir']}")
    best = summary["best"]
    print(
        f"best: {best['representation']}+{best['model']}"
        f"{'+metadata' if best['with_metadata'] else ''} rmse={best['rmse']:.4f} r2={best['r2']:.4f}"
    )
    print("files: " + ", ".join(summary["files"]))
    return EXIT_OK


def _cmd_serve(cfg, args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(cfg), host=args.host, port=args.port)
    return EXIT_OK


_COMMANDS = {
    "validate": _cmd_validate,
    "synth": _cmd_synth,
    "grid": _cmd_grid,
    "explain": _cmd_explain,
    "report": _cmd_report,
    "all": _cmd_all,
    "serve": _cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE

    try:
        cfg = _config_from_args(args)
        if args.provenance:
            print(json.dumps(runner.provenance(cfg), indent=2, sort_keys=True))
            return EXIT_OK
        if args.command is None:
            parser.print_usage(sys.stderr)
            return EXIT_USAGE
        return _COMMANDS[args.command](cfg, args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _VALIDATION_ERRORS as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except _RUNTIME_ERRORS as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
