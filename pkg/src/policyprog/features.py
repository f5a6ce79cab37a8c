"""Feature construction: TF-IDF text vectors, external dense embeddings,
and the metadata encodings, assembled into aligned named matrices.

Column sets and the TF-IDF vocabulary are always learned from training
records only; transforming a record never depends on which other records
are in the batch.
"""

from __future__ import annotations

import csv
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import PolicyRecord
from .textprep import CleanDoc

__all__ = [
    "FeatureError",
    "FeatureMatrix",
    "TfidfModel",
    "EmbeddingTable",
    "MetadataSchema",
    "LookupTables",
    "fit_tfidf",
    "transform_tfidf",
    "load_embeddings",
    "embedding_matrix",
    "load_lookup_csv",
    "fit_metadata_schema",
    "encode_metadata",
    "assemble",
]

log = logging.getLogger(__name__)

GROUP_TEXT = "text"
GROUP_METADATA = "metadata"
GROUP_EMBEDDING = "embedding"

# Category-column caps for the metadata schema.
MAX_COUNTRY_COLUMNS = 20
MAX_PARTY_COLUMNS = 7
MAX_SPOTLIGHT_COLUMNS = 5
MAX_PROCEDURE_COLUMNS = 4


class FeatureError(ValueError):
    """Invalid feature inputs or misaligned matrices."""


@dataclass(frozen=True)
class FeatureMatrix:
    """Dense named feature matrix aligned to policy ids.

    ``groups[i]`` tags column i as text / metadata / embedding; the tags feed
    the colour-coding in rendered charts.
    """

    row_ids: tuple[str, ...]
    names: tuple[str, ...]
    groups: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.ndim != 2:
            raise FeatureError(f"feature matrix must be 2-D, got shape {vals.shape}")
        if vals.shape != (len(self.row_ids), len(self.names)):
            raise FeatureError(
                f"shape {vals.shape} does not match {len(self.row_ids)} rows x {len(self.names)} columns"
            )
        if len(self.names) != len(self.groups):
            raise FeatureError("every column needs a group tag")
        if len(set(self.row_ids)) != len(self.row_ids):
            raise FeatureError("duplicate row ids")
        if len(set(self.names)) != len(self.names):
            dupes = [n for n, c in Counter(self.names).items() if c > 1]
            raise FeatureError(f"duplicate column names: {dupes[:5]}")
        if not np.all(np.isfinite(vals)):
            raise FeatureError("feature matrix contains NaN or infinite entries")

    @property
    def n_rows(self) -> int:
        return len(self.row_ids)

    @property
    def n_columns(self) -> int:
        return len(self.names)

    def column_index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise FeatureError(f"no column named {name!r}") from None

    def with_values(self, values: np.ndarray) -> "FeatureMatrix":
        return FeatureMatrix(self.row_ids, self.names, self.groups, values)

    def take_rows(self, ids) -> "FeatureMatrix":
        index = {rid: i for i, rid in enumerate(self.row_ids)}
        missing = [rid for rid in ids if rid not in index]
        if missing:
            raise FeatureError(f"rows not present in matrix: {missing[:5]}")
        sel = [index[rid] for rid in ids]
        return FeatureMatrix(tuple(ids), self.names, self.groups, self.values[sel])


# ---------------------------------------------------------------------------
# TF-IDF
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TfidfModel:
    """Vocabulary and document frequencies fitted on training documents.

    idf(t) = ln((1 + n_docs) / (1 + doc_freq(t))) + 1; cells are raw term
    count times idf, and each nonzero row is L2-normalized.
    """

    vocabulary: dict[str, int]
    doc_freq: np.ndarray
    n_docs: int
    min_df: int
    max_features: int | None

    @property
    def idf(self) -> np.ndarray:
        return np.log((1.0 + self.n_docs) / (1.0 + self.doc_freq)) + 1.0

    def tokens(self) -> list[str]:
        order = sorted(self.vocabulary, key=self.vocabulary.get)
        return order


def fit_tfidf(train_docs: list[CleanDoc], min_df: int = 2, max_features: int | None = None) -> TfidfModel:
    """Fit the vocabulary on training documents only.

    Tokens with document frequency below ``min_df`` are dropped; if
    ``max_features`` is set, the highest-df tokens are kept with ties broken
    lexicographically. Column order is lexicographic.
    """
    if not train_docs:
        raise FeatureError("cannot fit TF-IDF on an empty document list")
    if min_df < 1:
        raise FeatureError(f"min_df must be >= 1, got {min_df}")
    if max_features is not None and max_features < 1:
        raise FeatureError(f"max_features must be >= 1, got {max_features}")

    df_counter: Counter[str] = Counter()
    for doc in train_docs:
        df_counter.update(set(doc.tokens))

    kept = [(tok, df) for tok, df in df_counter.items() if df >= min_df]
    if max_features is not None and len(kept) > max_features:
        kept.sort(key=lambda item: (-item[1], item[0]))
        kept = kept[:max_features]
    if not kept:
        raise FeatureError(
            f"TF-IDF vocabulary is empty after filtering (min_df={min_df}, {len(train_docs)} docs)"
        )
    kept.sort(key=lambda item: item[0])
    vocabulary = {tok: i for i, (tok, _) in enumerate(kept)}
    doc_freq = np.array([df for _, df in kept], dtype=float)
    return TfidfModel(
        vocabulary=vocabulary,
        doc_freq=doc_freq,
        n_docs=len(train_docs),
        min_df=min_df,
        max_features=max_features,
    )


def transform_tfidf(model: TfidfModel, docs: list[CleanDoc]) -> FeatureMatrix:
    """Transform documents with a fitted model; out-of-vocabulary tokens are
    ignored and all-zero rows stay unnormalized."""
    vocab = model.vocabulary
    idf = model.idf
    values = np.zeros((len(docs), len(vocab)))
    for r, doc in enumerate(docs):
        counts = Counter(doc.tokens)
        for tok, tf in counts.items():
            col = vocab.get(tok)
            if col is not None:
                values[r, col] = tf * idf[col]
        norm = float(np.linalg.norm(values[r]))
        if norm > 0.0:
            values[r] /= norm
    names = tuple(model.tokens())
    return FeatureMatrix(
        row_ids=tuple(doc.id for doc in docs),
        names=names,
        groups=(GROUP_TEXT,) * len(names),
        values=values,
    )


# ---------------------------------------------------------------------------
# External dense embeddings
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EmbeddingTable:
    dim: int
    vectors: dict[str, np.ndarray]
    source_tag: str = ""


def load_embeddings(path: str | Path) -> EmbeddingTable:
    """Load an embedding CSV: header ``policy_id,e0,...``, one row per policy.

    A leading ``#`` comment line (written by the embedding generator to record
    encoder and pooling) is kept as the table's source tag."""
    path = Path(path)
    if not path.is_file():
        raise FeatureError(f"embedding file not found: {path}")
    source_tag = ""
    with path.open(encoding="utf-8", newline="") as fh:
        first = fh.readline()
        if first.startswith("#"):
            source_tag = first.lstrip("#").strip()
        else:
            fh.seek(0)
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FeatureError(f"embedding file {path} is empty") from None
        if not header or header[0] != "policy_id":
            raise FeatureError(f"embedding file {path}: first column must be 'policy_id'")
        dim = len(header) - 1
        if dim < 1:
            raise FeatureError(f"embedding file {path}: no value columns")
        vectors: dict[str, np.ndarray] = {}
        for i, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != dim + 1:
                raise FeatureError(
                    f"embedding file {path}: row {i} (id {row[0]!r}) has {len(row) - 1} values, expected {dim}"
                )
            pid = row[0]
            if pid in vectors:
                raise FeatureError(f"embedding file {path}: duplicate policy_id {pid!r}")
            try:
                vec = np.array([float(x) for x in row[1:]])
            except ValueError as exc:
                raise FeatureError(f"embedding file {path}: row {i}: {exc}") from exc
            if not np.all(np.isfinite(vec)):
                raise FeatureError(f"embedding file {path}: row {i} contains non-finite values")
            vectors[pid] = vec
    if not vectors:
        raise FeatureError(f"embedding file {path} has no data rows")
    return EmbeddingTable(dim=dim, vectors=vectors, source_tag=source_tag)


def embedding_matrix(table: EmbeddingTable, ids) -> FeatureMatrix:
    missing = [rid for rid in ids if rid not in table.vectors]
    if missing:
        raise FeatureError(f"embedding table missing ids: {missing[:5]}")
    values = np.stack([table.vectors[rid] for rid in ids]) if ids else np.zeros((0, table.dim))
    names = tuple(f"e{i}" for i in range(table.dim))
    return FeatureMatrix(
        row_ids=tuple(ids),
        names=names,
        groups=(GROUP_EMBEDDING,) * table.dim,
        values=values,
    )


# ---------------------------------------------------------------------------
# Metadata encoding
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LookupTables:
    voting_weights: dict[str, float]
    seat_shares: dict[str, float]


def load_lookup_csv(path: str | Path) -> dict[str, float]:
    """Two-column CSV (key,value with a header row) -> dict."""
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as fh:
        rows = [row for row in csv.reader(fh) if row and not row[0].startswith("#")]
    if len(rows) < 1:
        raise FeatureError(f"lookup file {path} is empty")
    out = {}
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise FeatureError(f"lookup file {path}: row {i} needs exactly 2 columns")
        try:
            value = float(row[1])
        except ValueError as exc:
            raise FeatureError(f"lookup file {path}: row {i}: {exc}") from exc
        if value < 0:
            raise FeatureError(f"lookup file {path}: row {i}: negative value {value}")
        out[row[0]] = value
    return out


@dataclass(frozen=True)
class MetadataSchema:
    """Category columns observed in training, plus the numeric lookups."""

    country_columns: tuple[str, ...]
    party_columns: tuple[str, ...]
    spotlight_columns: tuple[str, ...]
    procedure_columns: tuple[str, ...]
    sidecar_columns: tuple[str, ...]
    voting_weight_lookup: dict[str, float] = field(default_factory=dict)
    seat_share_lookup: dict[str, float] = field(default_factory=dict)


def _top_by_frequency(counter: Counter, cap: int) -> tuple[str, ...]:
    ranked = sorted(counter.items(), key=lambda item: (-item[1], item[0]))
    return tuple(name for name, _ in ranked[:cap])


def fit_metadata_schema(train: list[PolicyRecord], lookups: LookupTables) -> MetadataSchema:
    """Learn category columns from training records, capped by descending
    frequency (ties lexicographic). Missing lookup entries are tolerated,
    encoded as 0, and logged as warnings."""
    if not train:
        raise FeatureError("cannot fit a metadata schema on an empty record list")
    countries: Counter[str] = Counter()
    parties: Counter[str] = Counter()
    spotlights: Counter[str] = Counter()
    procedures: Counter[str] = Counter()
    sidecars: set[str] = set()
    for rec in train:
        for rap in rec.rapporteurs:
            countries[rap.country] += 1
            if rap.party:
                parties[rap.party] += 1
        if rec.spotlight:
            spotlights[rec.spotlight] += 1
        if rec.procedure_type:
            procedures[rec.procedure_type] += 1
        sidecars.update(name for name, _ in rec.sidecar_scores)

    schema = MetadataSchema(
        country_columns=_top_by_frequency(countries, MAX_COUNTRY_COLUMNS),
        party_columns=_top_by_frequency(parties, MAX_PARTY_COLUMNS),
        spotlight_columns=_top_by_frequency(spotlights, MAX_SPOTLIGHT_COLUMNS),
        procedure_columns=_top_by_frequency(procedures, MAX_PROCEDURE_COLUMNS),
        sidecar_columns=tuple(sorted(sidecars)),
        voting_weight_lookup=dict(lookups.voting_weights),
        seat_share_lookup=dict(lookups.seat_shares),
    )
    for country in schema.country_columns:
        if country not in schema.voting_weight_lookup:
            log.warning("no voting weight for country %r; encoding 0", country)
    for party in schema.party_columns:
        if party not in schema.seat_share_lookup:
            log.warning("no seat share for party %r; encoding 0", party)
    return schema


def metadata_column_names(schema: MetadataSchema) -> list[str]:
    names = ["month", "year"]
    names += [f"country:{c}" for c in schema.country_columns]
    names += ["no_rapporteur", "voting_weight"]
    names += [f"party:{p}" for p in schema.party_columns]
    names += ["no_party", "seat_share"]
    names += ["spotlight"]
    names += [f"spotlight:{s}" for s in schema.spotlight_columns]
    names += ["procedure_year"]
    names += [f"procedure:{p}" for p in schema.procedure_columns]
    names += ["legislative"]
    names += list(schema.sidecar_columns)
    return names


def encode_metadata(records: list[PolicyRecord], schema: MetadataSchema) -> FeatureMatrix:
    """Encode records against a fitted schema.

    Per record: month and year; per-country rapporteur counts; no_rapporteur;
    mean country voting weight; per-party any-rapporteur indicators; no_party
    (no rapporteur holds a retained party); mean party seat share; spotlight
    binary and per-tag one-hot; procedure year and per-type one-hot; the
    legislative flag; and the sidecar score columns. Categories unseen in
    training encode as all-zero in their group.
    """
    names = metadata_column_names(schema)
    col = {name: i for i, name in enumerate(names)}
    values = np.zeros((len(records), len(names)))
    for r, rec in enumerate(records):
        row = values[r]
        row[col["month"]] = rec.month
        row[col["year"]] = rec.year

        if not rec.rapporteurs:
            row[col["no_rapporteur"]] = 1.0
        else:
            for rap in rec.rapporteurs:
                key = f"country:{rap.country}"
                if key in col:
                    row[col[key]] += 1.0
            row[col["voting_weight"]] = float(
                np.mean([schema.voting_weight_lookup.get(rap.country, 0.0) for rap in rec.rapporteurs])
            )

        retained = [rap.party for rap in rec.rapporteurs if rap.party in schema.party_columns]
        for party in retained:
            row[col[f"party:{party}"]] = 1.0
        if not retained:
            row[col["no_party"]] = 1.0
        with_party = [rap.party for rap in rec.rapporteurs if rap.party]
        if with_party:
            row[col["seat_share"]] = float(
                np.mean([schema.seat_share_lookup.get(p, 0.0) for p in with_party])
            )

        if rec.spotlight:
            row[col["spotlight"]] = 1.0
            key = f"spotlight:{rec.spotlight}"
            if key in col:
                row[col[key]] = 1.0
        if rec.procedure_year is not None:
            row[col["procedure_year"]] = rec.procedure_year
        if rec.procedure_type:
            key = f"procedure:{rec.procedure_type}"
            if key in col:
                row[col[key]] = 1.0
        if rec.legislative:
            row[col["legislative"]] = 1.0
        for name, score in rec.sidecar_scores:
            if name in schema.sidecar_columns:
                row[col[name]] = score

    return FeatureMatrix(
        row_ids=tuple(rec.id for rec in records),
        names=tuple(names),
        groups=(GROUP_METADATA,) * len(names),
        values=values,
    )


# ---------------------------------------------------------------------------
# Assembly
# ---------------------------------------------------------------------------


def assemble(blocks: list[FeatureMatrix], prefixes: list[str] | None = None) -> FeatureMatrix:
    """Horizontally concatenate blocks sharing identical row order.

    A single block passes through unchanged. With several blocks, column
    names are prefixed ``<prefix>:<name>`` to guarantee uniqueness.
    """
    if not blocks:
        raise FeatureError("assemble needs at least one block")
    if len(blocks) == 1:
        return blocks[0]
    if prefixes is None:
        prefixes = [f"b{i}" for i in range(len(blocks))]
    if len(prefixes) != len(blocks):
        raise FeatureError(f"{len(blocks)} blocks but {len(prefixes)} prefixes")

    base = blocks[0].row_ids
    for b in blocks[1:]:
        if b.row_ids != base:
            diff = next(
                (i for i, (x, y) in enumerate(zip(base, b.row_ids)) if x != y),
                min(len(base), len(b.row_ids)),
            )
            got = b.row_ids[diff] if diff < len(b.row_ids) else "<missing>"
            want = base[diff] if diff < len(base) else "<missing>"
            raise FeatureError(f"row-id mismatch at position {diff}: {want!r} vs {got!r}")

    names: list[str] = []
    groups: list[str] = []
    for prefix, block in zip(prefixes, blocks):
        names.extend(f"{prefix}:{name}" for name in block.names)
        groups.extend(block.groups)
    dupes = [n for n, c in Counter(names).items() if c > 1]
    if dupes:
        raise FeatureError(f"duplicate column names after prefixing: {dupes[:5]}")
    values = np.hstack([block.values for block in blocks])
    return FeatureMatrix(base, tuple(names), tuple(groups), values)
