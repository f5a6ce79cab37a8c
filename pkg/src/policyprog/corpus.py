"""Policy data model: records, stage labels, corpus parsing, splits, and
synthetic corpora with planted signals for testing."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

__all__ = [
    "STAGE_ORDER",
    "STAGE_VALUES",
    "PLANTED_MARKER_TOKENS",
    "PLANTED_DECLINE_TOKEN",
    "PLANTED_METADATA_FEATURE",
    "SYNTHETIC_LABEL_DISTRIBUTION",
    "CorpusError",
    "CorpusValidationError",
    "Rapporteur",
    "PolicyRecord",
    "Corpus",
    "SplitIndices",
    "parse_stage",
    "map_stage",
    "parse_corpus",
    "record_from_obj",
    "record_to_obj",
    "serialize_corpus",
    "write_corpus",
    "load_sidecar_scores",
    "attach_sidecar_scores",
    "split",
    "generate_synthetic",
]

# Canonical stage names in legislative order. Withdrawn and Blocked share the
# lowest score; the remaining stages climb a fixed 0-1 scale.
STAGE_ORDER = (
    "Withdrawn",
    "Blocked",
    "Announced",
    "Tabled",
    "CloseToAdoption",
    "AdoptedCompleted",
)

STAGE_VALUES = {
    "Withdrawn": 0.0,
    "Blocked": 0.0,
    "Announced": 0.25,
    "Tabled": 0.5,
    "CloseToAdoption": 0.75,
    "AdoptedCompleted": 1.0,
}

# Accepted spellings (lowercased) -> canonical stage name.
_STAGE_ALIASES = {
    "withdrawn": "Withdrawn",
    "blocked": "Blocked",
    "announced": "Announced",
    "tabled": "Tabled",
    "closetoadoption": "CloseToAdoption",
    "close to adoption": "CloseToAdoption",
    "close_to_adoption": "CloseToAdoption",
    "adoptedcompleted": "AdoptedCompleted",
    "adopted/completed": "AdoptedCompleted",
    "adopted_completed": "AdoptedCompleted",
}


class CorpusError(ValueError):
    """Invalid corpus content or parameters."""


class CorpusValidationError(CorpusError):
    """One or more records failed validation; carries all collected errors."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("corpus validation failed:\n" + "\n".join(self.errors))


def parse_stage(value: str) -> str:
    """Return the canonical stage name for ``value`` (case-insensitive)."""
    key = str(value).strip().lower()
    if key not in _STAGE_ALIASES:
        raise CorpusError(
            f"unknown stage label {value!r}; expected one of {', '.join(STAGE_ORDER)}"
        )
    return _STAGE_ALIASES[key]


def map_stage(label: str) -> float:
    """Map a stage label to its fixed position on the 0-1 progression scale."""
    return STAGE_VALUES[parse_stage(label)]


@dataclass(frozen=True)
class Rapporteur:
    name: str
    country: str
    party: str | None = None  # absent means "no major party"

    def __post_init__(self):
        if not self.country or not str(self.country).strip():
            raise CorpusError(f"rapporteur {self.name!r} has an empty country")


@dataclass(frozen=True)
class PolicyRecord:
    id: str
    title: str
    body: str
    stage: str
    month: int
    year: int
    rapporteurs: tuple[Rapporteur, ...] = ()
    spotlight: str | None = None
    procedure_type: str | None = None
    procedure_year: int | None = None
    legislative: bool = False
    sidecar_scores: tuple[tuple[str, float], ...] = ()

    def __post_init__(self):
        if not self.body.strip():
            raise CorpusError(f"record {self.id!r} has an empty body")
        if not 1 <= int(self.month) <= 12:
            raise CorpusError(f"record {self.id!r} has month {self.month} outside 1-12")
        object.__setattr__(self, "stage", parse_stage(self.stage))

    @property
    def stage_value(self) -> float:
        return STAGE_VALUES[self.stage]

    def sidecar_dict(self) -> dict[str, float]:
        return dict(self.sidecar_scores)


@dataclass(frozen=True)
class Corpus:
    records: tuple[PolicyRecord, ...]

    def __post_init__(self):
        if not self.records:
            raise CorpusError("corpus is empty")
        seen: set[str] = set()
        for rec in self.records:
            if rec.id in seen:
                raise CorpusError(f"duplicate policy id {rec.id!r}")
            seen.add(rec.id)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def ids(self) -> tuple[str, ...]:
        return tuple(rec.id for rec in self.records)

    def stage_histogram(self) -> dict[str, int]:
        hist = {name: 0 for name in STAGE_ORDER}
        for rec in self.records:
            hist[rec.stage] += 1
        return hist

    def subset(self, ids) -> "Corpus":
        wanted = set(ids)
        return Corpus(tuple(rec for rec in self.records if rec.id in wanted))


def record_from_obj(obj: dict, where: str = "record") -> PolicyRecord:
    """Build a PolicyRecord from a decoded JSON object, validating fields.

    ``where`` labels error messages (e.g. "line 3")."""
    if not isinstance(obj, dict):
        raise CorpusError(f"{where}: expected a JSON object, got {type(obj).__name__}")
    missing = [k for k in ("id", "title", "text", "stage", "month", "year") if k not in obj]
    if missing:
        raise CorpusError(f"{where}: missing required fields {', '.join(missing)}")
    raps = []
    for i, rap in enumerate(obj.get("rapporteurs") or []):
        if not isinstance(rap, dict) or "name" not in rap or "country" not in rap:
            raise CorpusError(f"{where}: rapporteur {i} needs 'name' and 'country'")
        raps.append(Rapporteur(str(rap["name"]), str(rap["country"]), rap.get("party")))
    scores = obj.get("sidecar_scores") or {}
    if not isinstance(scores, dict):
        raise CorpusError(f"{where}: sidecar_scores must be an object")
    try:
        sidecar = tuple(sorted((str(k), float(v)) for k, v in scores.items()))
    except (TypeError, ValueError) as exc:
        raise CorpusError(f"{where}: non-numeric sidecar score ({exc})") from exc
    try:
        return PolicyRecord(
            id=str(obj["id"]),
            title=str(obj["title"]),
            body=str(obj["text"]),
            stage=str(obj["stage"]),
            month=int(obj["month"]),
            year=int(obj["year"]),
            rapporteurs=tuple(raps),
            spotlight=obj.get("spotlight"),
            procedure_type=obj.get("procedure_type"),
            procedure_year=int(obj["procedure_year"]) if obj.get("procedure_year") is not None else None,
            legislative=bool(obj.get("legislative", False)),
            sidecar_scores=sidecar,
        )
    except CorpusError as exc:
        raise CorpusError(f"{where}: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise CorpusError(f"{where}: {exc}") from exc


def record_to_obj(rec: PolicyRecord) -> dict:
    obj = {
        "id": rec.id,
        "title": rec.title,
        "text": rec.body,
        "stage": rec.stage,
        "month": rec.month,
        "year": rec.year,
        "rapporteurs": [
            {"name": r.name, "country": r.country, "party": r.party} for r in rec.rapporteurs
        ],
        "spotlight": rec.spotlight,
        "procedure_type": rec.procedure_type,
        "procedure_year": rec.procedure_year,
        "legislative": rec.legislative,
    }
    if rec.sidecar_scores:
        obj["sidecar_scores"] = dict(rec.sidecar_scores)
    return obj


def parse_corpus(path: str | Path, fmt: str = "jsonl") -> Corpus:
    """Parse a JSONL corpus file, collecting validation errors per line."""
    if fmt != "jsonl":
        raise CorpusError(f"unsupported corpus format {fmt!r}")
    path = Path(path)
    if not path.is_file():
        raise CorpusError(f"corpus file not found: {path}")
    text = path.read_text(encoding="utf-8")

    records: list[PolicyRecord] = []
    errors: list[str] = []
    seen: dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        where = f"line {lineno}"
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            errors.append(f"{where}: malformed JSON ({exc.msg})")
            continue
        try:
            rec = record_from_obj(obj, where=where)
        except CorpusError as exc:
            errors.append(str(exc))
            continue
        if rec.id in seen:
            errors.append(
                f"{where}: duplicate id {rec.id!r} (first seen on line {seen[rec.id]})"
            )
            continue
        seen[rec.id] = lineno
        records.append(rec)

    if errors:
        raise CorpusValidationError(errors)
    if not records:
        raise CorpusError(f"corpus file {path} contains no records")
    return Corpus(tuple(records))


def serialize_corpus(corpus: Corpus) -> str:
    """Render a corpus as JSONL with a stable field order."""
    lines = [json.dumps(record_to_obj(rec), ensure_ascii=False) for rec in corpus]
    return "\n".join(lines) + "\n"


def write_corpus(corpus: Corpus, path: str | Path) -> None:
    Path(path).write_text(serialize_corpus(corpus), encoding="utf-8")


def load_sidecar_scores(path: str | Path) -> dict[str, dict[str, float]]:
    """Load a sidecar-score CSV (first column ``policy_id``) keyed by id."""
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as fh:
        rows = [row for row in csv.reader(fh) if row and not row[0].startswith("#")]
    if not rows:
        raise CorpusError(f"sidecar file {path} is empty")
    header = rows[0]
    if header[0] != "policy_id":
        raise CorpusError(f"sidecar file {path}: first column must be 'policy_id'")
    columns = header[1:]
    out: dict[str, dict[str, float]] = {}
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise CorpusError(f"sidecar file {path}: row {i} has {len(row)} cells, expected {len(header)}")
        pid = row[0]
        if pid in out:
            raise CorpusError(f"sidecar file {path}: duplicate policy_id {pid!r}")
        try:
            out[pid] = {col: float(val) for col, val in zip(columns, row[1:])}
        except ValueError as exc:
            raise CorpusError(f"sidecar file {path}: row {i}: {exc}") from exc
    return out


def attach_sidecar_scores(corpus: Corpus, scores: dict[str, dict[str, float]]) -> Corpus:
    """Return a corpus whose records carry the given sidecar scores merged in."""
    unknown = set(scores) - set(corpus.ids())
    if unknown:
        raise CorpusError(f"sidecar scores reference unknown ids: {sorted(unknown)[:5]}")
    out = []
    for rec in corpus:
        extra = scores.get(rec.id)
        if extra:
            merged = rec.sidecar_dict()
            merged.update(extra)
            rec = replace(rec, sidecar_scores=tuple(sorted(merged.items())))
        out.append(rec)
    return Corpus(tuple(out))


@dataclass(frozen=True)
class SplitIndices:
    """Train/test partition of a corpus, ordered as in the source corpus."""

    train_ids: tuple[str, ...]
    test_ids: tuple[str, ...]
    seed: int
    ratio: float
    stratified: bool = True

    def __post_init__(self):
        overlap = set(self.train_ids) & set(self.test_ids)
        if overlap:
            raise CorpusError(f"split overlap: {sorted(overlap)[:5]}")


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def split(corpus: Corpus, ratio: float = 0.2, seed: int = 42, stratified: bool = True) -> SplitIndices:
    """Deterministic train/test split; stratified by stage label by default.

    Stratified allocation uses largest-remainder rounding of ``ratio * n_stage``
    so each stage's test count is within one record of exact proportionality.
    """
    if not 0.0 < ratio < 1.0:
        raise CorpusError(f"split ratio must lie in (0, 1), got {ratio}")
    n = len(corpus)
    if n < 2:
        raise CorpusError("corpus too small to split (need at least 2 records)")
    n_test = _round_half_up(ratio * n)
    if n_test < 1 or n_test >= n:
        raise CorpusError(f"ratio {ratio} leaves an empty train or test side for n={n}")

    ids = corpus.ids()
    rng = np.random.default_rng(np.random.SeedSequence([seed]))

    if not stratified:
        test_pos = set(rng.choice(n, size=n_test, replace=False).tolist())
    else:
        groups: dict[str, list[int]] = {}
        for pos, rec in enumerate(corpus):
            groups.setdefault(rec.stage, []).append(pos)
        ordered_stages = [s for s in STAGE_ORDER if s in groups]
        quotas = {s: ratio * len(groups[s]) for s in ordered_stages}
        counts = {s: int(math.floor(quotas[s])) for s in ordered_stages}
        shortfall = n_test - sum(counts.values())
        # distribute leftovers by largest fractional remainder; ties favour
        # bigger strata, then stage order, to keep the allocation total
        remainders = sorted(
            ordered_stages,
            key=lambda s: (-(quotas[s] - counts[s]), -len(groups[s]), ordered_stages.index(s)),
        )
        for s in remainders[: max(shortfall, 0)]:
            counts[s] += 1
        test_pos = set()
        for s in ordered_stages:
            members = groups[s]
            k = min(counts[s], len(members))
            if k > 0:
                chosen = rng.choice(len(members), size=k, replace=False)
                test_pos.update(members[int(c)] for c in chosen)

    train_ids = tuple(ids[i] for i in range(n) if i not in test_pos)
    test_ids = tuple(ids[i] for i in range(n) if i in test_pos)
    return SplitIndices(train_ids, test_ids, seed=seed, ratio=ratio, stratified=stratified)


# ---------------------------------------------------------------------------
# Synthetic corpora with planted signals
# ---------------------------------------------------------------------------

# Marker tokens whose per-document frequency rises with the progression score.
# All three are fixed points of the lemmatizer, so they keep their names
# through the text pipeline.
PLANTED_MARKER_TOKENS = ("milestone", "breakthrough", "consensus")
# A single token whose frequency falls as policies progress.
PLANTED_DECLINE_TOKEN = "deadlock"
# Metadata pattern anti-correlated with progression: the probability that a
# record has no rapporteur party drops from 0.85 at score 0 to 0.20 at score 1.
PLANTED_METADATA_FEATURE = "no_party"

# Stage sampling weights for synthetic corpora (heavy on the middle stages,
# rare Blocked/Withdrawn, mirroring real trackers).
SYNTHETIC_LABEL_DISTRIBUTION = (
    ("Withdrawn", 0.03),
    ("Blocked", 0.02),
    ("Announced", 0.25),
    ("Tabled", 0.30),
    ("CloseToAdoption", 0.25),
    ("AdoptedCompleted", 0.15),
)

_SYLLABLES = (
    "ba", "be", "bi", "bo", "bu", "da", "de", "di", "do", "du",
    "fa", "fe", "fi", "fo", "fu", "ga", "ge", "gi", "go", "gu",
    "ka", "ke", "ki", "ko", "ku", "la", "le", "li", "lo", "lu",
    "ma", "me", "mi", "mo", "mu", "na", "ne", "ni", "no", "nu",
    "pa", "pe", "pi", "po", "pu", "ra", "re", "ri", "ro", "ru",
    "sa", "se", "si", "so", "su", "ta", "te", "ti", "to", "tu",
    "va", "ve", "vi", "vo", "vu", "za", "ze", "zi", "zo", "zu",
)

_SYNTH_COUNTRIES = (
    "France", "Germany", "Finland", "Czechia", "Spain", "Italy",
    "Poland", "Sweden", "Netherlands", "Portugal", "Austria", "Denmark",
)
_SYNTH_PARTIES = ("EPP", "S&D", "Renew", "Greens/EFA", "ECR", "ID", "GUE/NGL")
_SYNTH_SPOTLIGHTS = ("JD21", "JD22", "JD23")
_SYNTH_PROCEDURES = ("COD", "CNS", "APP", "INI")

_FIRST_NAMES = (
    "anna", "boris", "clara", "david", "eva", "felix", "greta", "henrik",
    "ines", "jonas", "karin", "lukas", "marta", "nils", "olga", "pavel",
)
_LAST_NAMES = (
    "adler", "bergstrom", "costa", "dvorak", "eriksen", "fischer", "garcia",
    "hansen", "ivanova", "jansen", "kowalski", "lindberg", "moreau", "novak",
    "olsen", "petrov",
)


def _synthetic_word(index: int) -> str:
    """Deterministic pronounceable pseudo-word for vocabulary slot ``index``."""
    n = len(_SYLLABLES)
    parts = [_SYLLABLES[index % n], _SYLLABLES[(index // n) % n], _SYLLABLES[(index // (n * n)) % n]]
    return "".join(parts)


def _synthetic_stage_counts(n: int) -> dict[str, int]:
    """Largest-remainder allocation of n records over the label distribution,
    with every stage present at least once."""
    quotas = {name: n * p for name, p in SYNTHETIC_LABEL_DISTRIBUTION}
    counts = {name: max(1, int(math.floor(q))) for name, q in quotas.items()}
    names = [name for name, _ in SYNTHETIC_LABEL_DISTRIBUTION]
    total = sum(counts.values())
    if total > n:  # the minimum-one floor can overshoot for small n
        for name in sorted(names, key=lambda s: -counts[s]):
            while total > n and counts[name] > 1:
                counts[name] -= 1
                total -= 1
    order = sorted(names, key=lambda s: (-(quotas[s] - math.floor(quotas[s])), names.index(s)))
    i = 0
    while total < n:
        counts[order[i % len(order)]] += 1
        total += 1
        i += 1
    return counts


def generate_synthetic(seed: int, n: int, vocab_size: int = 200) -> Corpus:
    """Generate a corpus whose stage is recoverable from planted signals.

    Planted signals, documented for tests and demos:

    * ``PLANTED_MARKER_TOKENS`` appear with per-token probability
      ``0.03 + 0.11 * score``, so their frequency rises with the stage score.
    * ``PLANTED_DECLINE_TOKEN`` appears with probability ``0.10 - 0.08 * score``.
    * The ``no_party`` metadata pattern (no rapporteur, or rapporteurs without
      a party) occurs with probability ``0.85 - 0.65 * score``.

    Everything else (background vocabulary, dates, spotlight tags, procedure
    codes, the legislative flag) is noise drawn from fixed pools.
    """
    if n < 20:
        raise CorpusError(f"synthetic corpus needs n >= 20, got {n}")
    if vocab_size < 50:
        raise CorpusError(f"synthetic vocabulary needs >= 50 words, got {vocab_size}")

    rng = np.random.default_rng(np.random.SeedSequence([seed, n, vocab_size]))
    vocab = [_synthetic_word(i) for i in range(vocab_size)]
    reserved = set(PLANTED_MARKER_TOKENS) | {PLANTED_DECLINE_TOKEN}
    assert not reserved & set(vocab)
    # Zipf-ish background distribution over the vocabulary.
    ranks = np.arange(1, vocab_size + 1, dtype=float)
    bg_probs = 1.0 / (ranks + 2.7)
    bg_probs /= bg_probs.sum()

    counts = _synthetic_stage_counts(n)
    stages = [name for name in STAGE_ORDER for _ in range(counts[name])]
    rng.shuffle(stages)

    records = []
    for i, stage in enumerate(stages):
        score = STAGE_VALUES[stage]
        p_marker = 0.03 + 0.11 * score
        p_decline = 0.10 - 0.08 * score
        length = int(rng.integers(80, 161))
        draws = rng.random(length)
        marker_choice = rng.integers(0, len(PLANTED_MARKER_TOKENS), size=length)
        bg_choice = rng.choice(vocab_size, size=length, p=bg_probs)
        tokens = []
        for j in range(length):
            if draws[j] < p_marker:
                tokens.append(PLANTED_MARKER_TOKENS[int(marker_choice[j])])
            elif draws[j] < p_marker + p_decline:
                tokens.append(PLANTED_DECLINE_TOKEN)
            else:
                tokens.append(vocab[int(bg_choice[j])])
        body = " ".join(tokens)

        title_len = int(rng.integers(3, 7))
        title = " ".join(vocab[int(k)] for k in rng.choice(vocab_size, size=title_len, p=bg_probs))

        p_no_party = 0.85 - 0.65 * score
        raps: list[Rapporteur] = []
        if rng.random() < p_no_party:
            if rng.random() < 0.5:
                raps = []  # no rapporteur at all
            else:
                raps = [_synthetic_rapporteur(rng, party=None)]
        else:
            for _ in range(int(rng.integers(1, 3))):
                party = _SYNTH_PARTIES[int(rng.integers(0, len(_SYNTH_PARTIES)))]
                raps.append(_synthetic_rapporteur(rng, party=party))

        spotlight = None
        if rng.random() < 0.3:
            spotlight = _SYNTH_SPOTLIGHTS[int(rng.integers(0, len(_SYNTH_SPOTLIGHTS)))]
        procedure_type = None
        procedure_year = None
        year = int(rng.integers(2019, 2025))
        if rng.random() < 0.8:
            procedure_type = _SYNTH_PROCEDURES[int(rng.integers(0, len(_SYNTH_PROCEDURES)))]
            procedure_year = year

        records.append(
            PolicyRecord(
                id=f"synth-{i:04d}",
                title=title,
                body=body,
                stage=stage,
                month=int(rng.integers(1, 13)),
                year=year,
                rapporteurs=tuple(raps),
                spotlight=spotlight,
                procedure_type=procedure_type,
                procedure_year=procedure_year,
                legislative=bool(rng.random() < 0.7),
            )
        )
    return Corpus(tuple(records))


def _synthetic_rapporteur(rng: np.random.Generator, party: str | None) -> Rapporteur:
    first = _FIRST_NAMES[int(rng.integers(0, len(_FIRST_NAMES)))]
    last = _LAST_NAMES[int(rng.integers(0, len(_LAST_NAMES)))]
    country = _SYNTH_COUNTRIES[int(rng.integers(0, len(_SYNTH_COUNTRIES)))]
    return Rapporteur(name=f"{first.title()} {last.title()}", country=country, party=party)
