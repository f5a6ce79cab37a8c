"""Rendering: benchmark grids as markdown/CSV, and attribution charts as
deterministic hand-built SVG (no plotting dependency).

Text-group features are drawn black; metadata features take colours from a
fixed palette keyed on the column's sub-group (date, country, party, ...);
embedding dimensions are aggregated into a single "text_embedding" entry
because individual dimensions are not interpretable.
"""

from __future__ import annotations

import io
import csv
import logging
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

from .evaluate import GridResult
from .explain import ExplainError, ImportanceEntry, ImportanceReport, ShapMatrix
from .features import FeatureMatrix

__all__ = [
    "ChartSpec",
    "render_grid",
    "render_importance_chart",
    "render_shap_summary",
    "aggregate_embedding_importance",
    "shap_long_csv",
    "load_shap_csv",
    "load_importance_csv",
]

log = logging.getLogger(__name__)

TEXT_COLOR = "#000000"
EMBEDDING_COLOR = "#0f766e"
CONSTANT_FEATURE_COLOR = "#808080"

# Fixed palette for metadata sub-groups (keyed by column-name prefix).
METADATA_PALETTE = {
    "date": "#1f77b4",
    "country": "#ff7f0e",
    "party": "#2ca02c",
    "spotlight": "#d62728",
    "procedure": "#9467bd",
    "type": "#8c564b",
    "sidecar": "#e377c2",
    "other": "#7f7f7f",
}

_METADATA_SUBGROUPS = (
    (("month", "year"), "date"),
    (("country:", "no_rapporteur", "voting_weight"), "country"),
    (("party:", "no_party", "seat_share"), "party"),
    (("spotlight",), "spotlight"),
    (("procedure",), "procedure"),
    (("legislative",), "type"),
)


@dataclass(frozen=True)
class ChartSpec:
    title: str = ""
    top_k: int = 20
    width: int = 900
    height: int | None = None  # derived from top_k when unset
    group_colors: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.top_k < 1:
            raise ValueError(f"top_k must be >= 1, got {self.top_k}")


def feature_color(name: str, group: str, overrides: dict | None = None) -> str:
    if overrides and group in overrides:
        return overrides[group]
    if group == "text":
        return TEXT_COLOR
    if group == "embedding":
        return EMBEDDING_COLOR
    # assembled names carry block prefixes (meta:country:France); try every
    # colon suffix so the sub-group prefix is found regardless of nesting
    candidates = [name]
    while ":" in candidates[-1]:
        candidates.append(candidates[-1].split(":", 1)[1])
    for base in candidates:
        for prefixes, sub in _METADATA_SUBGROUPS:
            if any(base.startswith(p) for p in prefixes):
                return METADATA_PALETTE[sub]
    if any(base.startswith("cb_") for base in candidates):
        return METADATA_PALETTE["sidecar"]
    return METADATA_PALETTE["other"]


# ---------------------------------------------------------------------------
# Grid tables
# ---------------------------------------------------------------------------


def _sorted_cells(cells) -> list:
    return sorted(cells, key=lambda c: (c.metrics.rmse, -c.metrics.r2, c.representation, c.model_kind))


def render_grid(result: GridResult) -> tuple[str, str]:
    """Render a grid as (markdown, csv).

    The markdown mirrors the benchmark layout: one table per metadata
    setting, rows sorted by RMSE ascending then R-squared descending, best
    RMSE and best R-squared in bold. The snapped-category accuracy column is
    a supplementary diagnostic, not one of the primary metrics."""
    if not result.rows:
        raise ValueError("empty grid")

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["representation", "model", "with_metadata", "rmse", "r2", "n", "seed"])
    for cell in _sorted_cells(result.rows):
        writer.writerow(
            [
                cell.representation,
                cell.model_kind,
                str(cell.with_metadata).lower(),
                f"{cell.metrics.rmse:.4f}",
                f"{cell.metrics.r2:.4f}",
                cell.metrics.n,
                cell.seed,
            ]
        )
    csv_text = buf.getvalue()

    sections = []
    for with_metadata, caption in ((True, "Policy text and metadata features"), (False, "Policy text features only")):
        cells = [c for c in result.rows if c.with_metadata == with_metadata]
        if not cells:
            continue
        cells = _sorted_cells(cells)
        best_rmse = min(c.metrics.rmse for c in cells)
        best_r2 = max(c.metrics.r2 for c in cells)
        lines = [
            f"### {caption}",
            "",
            "| Feature Representation | Regression Model | RMSE | R² | Accuracy* |",
            "| --- | --- | --- | --- | --- |",
        ]
        for c in cells:
            rmse_s = f"{c.metrics.rmse:.4f}"
            r2_s = f"{c.metrics.r2:.4f}"
            if c.metrics.rmse == best_rmse:
                rmse_s = f"**{rmse_s}**"
            if c.metrics.r2 == best_r2:
                r2_s = f"**{r2_s}**"
            lines.append(
                f"| {c.representation} | {c.model_kind} | {rmse_s} | {r2_s} | {c.accuracy:.4f} |"
            )
        lines.append("")
        sections.append("\n".join(lines))
    md = "\n".join(sections) + "\n*Accuracy of snapped categories; supplementary diagnostic only.\n"
    return md, csv_text


# ---------------------------------------------------------------------------
# SVG helpers
# ---------------------------------------------------------------------------


def _svg_header(width: int, height: int, title: str) -> list[str]:
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="Helvetica, Arial, sans-serif">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
    ]
    if title:
        parts.append(f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>')
    return parts


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def aggregate_embedding_importance(report: ImportanceReport) -> ImportanceReport:
    """Collapse embedding-dimension entries into one ``text_embedding`` entry
    (summed importance) since single dimensions carry no meaning."""
    emb = [e for e in report.entries if e.group == "embedding"]
    if not emb:
        return report
    rest = tuple(e for e in report.entries if e.group != "embedding")
    total = float(sum(e.importance for e in emb))
    std = float(np.sqrt(sum(e.std**2 for e in emb)))
    merged = ImportanceEntry("text_embedding", "embedding", total, std)
    return ImportanceReport(rest + (merged,), repeats=report.repeats, seed=report.seed)


def render_importance_chart(report: ImportanceReport, spec: ChartSpec) -> str:
    """Horizontal bar chart of the top_k features by importance, coloured by
    feature group. Deterministic bytes for identical inputs."""
    if not report.entries:
        raise ValueError("empty importance report")
    entries = aggregate_embedding_importance(report).sorted_entries()
    top_k = spec.top_k
    if top_k > len(entries):
        log.warning("top_k=%d exceeds %d features; clamping", top_k, len(entries))
        top_k = len(entries)
    entries = entries[:top_k]

    row_h = 22
    margin_top, margin_bottom, label_w, margin_right = 36, 28, 230, 30
    width = spec.width
    height = spec.height or (margin_top + margin_bottom + row_h * len(entries))
    plot_w = width - label_w - margin_right

    lo = min(0.0, min(e.importance for e in entries))
    hi = max(0.0, max(e.importance for e in entries))
    span = hi - lo or 1.0

    def xpos(v: float) -> float:
        return label_w + (v - lo) / span * plot_w

    parts = _svg_header(width, height, spec.title)
    x0 = xpos(0.0)
    parts.append(
        f'<line x1="{_fmt(x0)}" y1="{margin_top - 6}" x2="{_fmt(x0)}" y2="{height - margin_bottom + 6}" stroke="#999999" stroke-width="1"/>'
    )
    for i, e in enumerate(entries):
        y = margin_top + i * row_h
        color = feature_color(e.feature, e.group, spec.group_colors)
        bx = min(x0, xpos(e.importance))
        bw = abs(xpos(e.importance) - x0)
        parts.append(
            f'<rect x="{_fmt(bx)}" y="{_fmt(y + 3)}" width="{_fmt(bw)}" height="{row_h - 8}" fill="{color}"/>'
        )
        parts.append(
            f'<text x="{label_w - 6}" y="{_fmt(y + row_h / 2 + 2)}" text-anchor="end" font-size="11">{escape(e.feature)}</text>'
        )
        parts.append(
            f'<text x="{_fmt(xpos(max(e.importance, 0.0)) + 4)}" y="{_fmt(y + row_h / 2 + 2)}" font-size="10" fill="#555555">{e.importance:.4f}</text>'
        )
    parts.append(
        f'<text x="{_fmt(label_w + plot_w / 2)}" y="{height - 8}" text-anchor="middle" font-size="11">RMSE increase after shuffling feature</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts)


def shap_long_csv(matrix: ShapMatrix, feature_values: FeatureMatrix) -> str:
    """Long-form CSV of Shapley values with the underlying feature values,
    self-contained enough to re-render the summary chart later."""
    if matrix.row_ids != feature_values.row_ids or matrix.names != feature_values.names:
        raise ExplainError("attribution matrix and feature values are not aligned")
    buf = io.StringIO()
    buf.write(
        f"# base_value={matrix.base_value:.12g} method={matrix.method} "
        f"background_size={matrix.background_size} seed={matrix.seed}\n"
    )
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["policy_id", "feature", "group", "shap_value", "feature_value"])
    for r, rid in enumerate(matrix.row_ids):
        for c, (name, group) in enumerate(zip(matrix.names, matrix.groups)):
            writer.writerow(
                [rid, name, group, f"{matrix.values[r, c]:.10g}", f"{feature_values.values[r, c]:.10g}"]
            )
    return buf.getvalue()


def load_shap_csv(text: str) -> tuple[ShapMatrix, FeatureMatrix]:
    """Inverse of shap_long_csv."""
    lines = text.splitlines()
    meta = {}
    if lines and lines[0].startswith("#"):
        for part in lines[0].lstrip("#").split():
            if "=" in part:
                k, v = part.split("=", 1)
                meta[k] = v
        lines = lines[1:]
    rows = list(csv.reader(io.StringIO("\n".join(lines))))
    header, body = rows[0], rows[1:]
    if header != ["policy_id", "feature", "group", "shap_value", "feature_value"]:
        raise ExplainError(f"unexpected attribution CSV header: {header}")
    row_ids = list(dict.fromkeys(r[0] for r in body))
    names = list(dict.fromkeys(r[1] for r in body))
    groups = {r[1]: r[2] for r in body}
    rindex = {rid: i for i, rid in enumerate(row_ids)}
    cindex = {name: i for i, name in enumerate(names)}
    shap_vals = np.zeros((len(row_ids), len(names)))
    feat_vals = np.zeros((len(row_ids), len(names)))
    for rid, name, _group, sv, fv in body:
        shap_vals[rindex[rid], cindex[name]] = float(sv)
        feat_vals[rindex[rid], cindex[name]] = float(fv)
    group_tuple = tuple(groups[n] for n in names)
    matrix = ShapMatrix(
        row_ids=tuple(row_ids),
        names=tuple(names),
        groups=group_tuple,
        values=shap_vals,
        base_value=float(meta.get("base_value", 0.0)),
        method=meta.get("method", "tree_exact"),
        background_size=int(meta.get("background_size", 0)),
        seed=int(meta.get("seed", 0)),
    )
    features = FeatureMatrix(tuple(row_ids), tuple(names), group_tuple, feat_vals)
    return matrix, features


def load_importance_csv(text: str) -> ImportanceReport:
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    if header != ["feature", "group", "importance", "std"]:
        raise ExplainError(f"unexpected importance CSV header: {header}")
    entries = tuple(
        ImportanceEntry(feature, group, float(importance), float(std))
        for feature, group, importance, std in body
    )
    return ImportanceReport(entries, repeats=0, seed=0)


def _blue_red(t: float) -> str:
    """Linear blue (#1f77b4) to red (#d62728) ramp, t in [0, 1]."""
    b = (0x1F, 0x77, 0xB4)
    r = (0xD6, 0x27, 0x28)
    rgb = tuple(round(bv + (rv - bv) * t) for bv, rv in zip(b, r))
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def render_shap_summary(matrix: ShapMatrix, feature_values: FeatureMatrix, spec: ChartSpec) -> str:
    """Per-feature strips of per-row points: x is the Shapley value, colour is
    the min-max scaled feature value (blue to red, midpoint grey for constant
    features). Features are ordered by mean |value| descending; points stack
    vertically in a deterministic pattern instead of random jitter."""
    if matrix.row_ids != feature_values.row_ids:
        raise ExplainError("attribution matrix and feature values are not row-aligned")
    if matrix.names != feature_values.names:
        raise ExplainError("attribution matrix and feature values list different columns")

    order = np.argsort(-np.abs(matrix.values).mean(axis=0), kind="stable")
    top_k = spec.top_k
    if top_k > len(order):
        log.warning("top_k=%d exceeds %d features; clamping", top_k, len(order))
        top_k = len(order)
    order = order[:top_k]

    row_h = 26
    margin_top, margin_bottom, label_w, margin_right = 36, 34, 230, 30
    width = spec.width
    height = spec.height or (margin_top + margin_bottom + row_h * top_k)
    plot_w = width - label_w - margin_right

    vmin = float(matrix.values[:, order].min()) if matrix.values.size else 0.0
    vmax = float(matrix.values[:, order].max()) if matrix.values.size else 0.0
    lo, hi = min(vmin, 0.0), max(vmax, 0.0)
    span = hi - lo or 1.0

    def xpos(v: float) -> float:
        return label_w + (v - lo) / span * plot_w

    parts = _svg_header(width, height, spec.title)
    x0 = xpos(0.0)
    parts.append(
        f'<line x1="{_fmt(x0)}" y1="{margin_top - 6}" x2="{_fmt(x0)}" y2="{height - margin_bottom + 6}" stroke="#999999" stroke-width="1"/>'
    )
    offsets = (0.0, 3.5, -3.5, 7.0, -7.0)
    for i, col in enumerate(order):
        y_mid = margin_top + i * row_h + row_h / 2
        name = matrix.names[col]
        parts.append(
            f'<text x="{label_w - 6}" y="{_fmt(y_mid + 3)}" text-anchor="end" font-size="11">{escape(name)}</text>'
        )
        fvals = feature_values.values[:, col]
        fmin, fmax = float(fvals.min()), float(fvals.max())
        constant = fmax - fmin == 0.0
        point_order = np.argsort(matrix.values[:, col], kind="stable")
        for rank, r in enumerate(point_order):
            sv = float(matrix.values[r, col])
            if constant:
                color = CONSTANT_FEATURE_COLOR
            else:
                color = _blue_red((float(fvals[r]) - fmin) / (fmax - fmin))
            y = y_mid + offsets[rank % len(offsets)]
            parts.append(
                f'<circle cx="{_fmt(xpos(sv))}" cy="{_fmt(y)}" r="2.4" fill="{color}" fill-opacity="0.85"/>'
            )
    parts.append(
        f'<text x="{_fmt(label_w + plot_w / 2)}" y="{height - 10}" text-anchor="middle" font-size="11">contribution toward advanced progression (positive = later stage)</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts)
