"""Text normalization: cleaning, tokenization, stop-word removal, and a
rule-plus-exception lemmatizer.

All operations are pure. The stop-word list and the lemmatizer exception
table are plain-text data files bundled with the package; their SHA-256
hashes are exposed for provenance reporting.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

__all__ = [
    "CleanDoc",
    "clean_text",
    "tokenize",
    "remove_stopwords",
    "lemmatize",
    "lemmatize_token",
    "prepare",
    "prepare_corpus",
    "default_stopwords",
    "data_file_hashes",
]

_NON_ALPHA = re.compile(r"[^a-zA-Z]+")
_TOKEN = re.compile(r"^[a-z]+$")

_VOWELS = set("aeiou")


@dataclass(frozen=True)
class CleanDoc:
    """A normalized document: lowercase alphabetic tokens, stop words removed."""

    id: str
    tokens: tuple[str, ...]


def _read_data(name: str) -> str:
    return resources.files("policyprog.data").joinpath(name).read_text(encoding="utf-8")


@lru_cache(maxsize=None)
def default_stopwords() -> frozenset[str]:
    words = []
    for line in _read_data("stopwords.txt").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            if not _TOKEN.match(line):
                raise ValueError(f"stopwords.txt entry {line!r} is not lowercase alphabetic")
            words.append(line)
    return frozenset(words)


@lru_cache(maxsize=None)
def _exceptions() -> dict[str, str]:
    table = {}
    for line in _read_data("lemma_exceptions.txt").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        form, lemma = line.split()
        if not (_TOKEN.match(form) and _TOKEN.match(lemma)):
            raise ValueError(f"lemma_exceptions.txt entry {line!r} is not lowercase alphabetic")
        table[form] = lemma
    return table


def data_file_hashes() -> dict[str, str]:
    """SHA-256 of each bundled data file, keyed by file name."""
    out = {}
    for name in ("stopwords.txt", "lemma_exceptions.txt", "voting_weights.csv", "seat_shares.csv"):
        digest = hashlib.sha256(_read_data(name).encode("utf-8")).hexdigest()
        out[name] = digest
    return out


def clean_text(raw: str) -> str:
    """Replace every non-ASCII-alphabet character with a space, lowercase,
    and collapse whitespace. Accented letters count as non-alphabet."""
    return " ".join(_NON_ALPHA.sub(" ", raw).lower().split())


def tokenize(cleaned: str) -> list[str]:
    """Split cleaned text on spaces; empty input gives an empty list."""
    return cleaned.split(" ") if cleaned else []


def remove_stopwords(tokens: list[str], stoplist: frozenset[str] | set[str] | None = None) -> list[str]:
    if stoplist is None:
        stoplist = default_stopwords()
    return [t for t in tokens if t not in stoplist]


def _fixup(stem: str) -> str:
    # restore a dropped final 'e' after common verb stems, or undouble a
    # trailing consonant (planned -> plan), keeping ll/ss/zz intact
    if stem.endswith(("at", "bl", "iz")):
        return stem + "e"
    if (
        len(stem) >= 3
        and stem[-1] == stem[-2]
        and stem[-1] not in _VOWELS
        and stem[-1] not in "lsz"
    ):
        return stem[:-1]
    return stem


def _has_vowel(s: str) -> bool:
    return any(c in _VOWELS for c in s)


def _apply_rules(word: str) -> str:
    """One pass of the suffix cascade; first matching rule wins."""
    if word.endswith("sses"):
        return word[:-2]
    if word.endswith(("ches", "shes")):
        return word[:-2]
    if word.endswith("xes"):
        return word[:-2]
    if word.endswith("ies") and len(word) >= 5:
        return word[:-3] + "y"
    if word.endswith("men"):
        return word[:-2] + "an"
    if (
        word.endswith("s")
        and len(word) >= 4
        and not word.endswith(("ss", "us", "is"))
    ):
        return word[:-1]
    if word.endswith("ied") and len(word) >= 5:
        return word[:-3] + "y"
    if word.endswith("eed"):
        return word  # agreed/freed are handled by the exception table
    if word.endswith("ed") and len(word) >= 5:
        stem = _fixup(word[:-2])
        if len(stem) >= 3 and _has_vowel(stem):
            return stem
        return word
    if word.endswith("ing") and len(word) >= 6:
        stem = _fixup(word[:-3])
        if len(stem) >= 3 and _has_vowel(stem):
            return stem
        return word
    return word


def lemmatize_token(token: str) -> str:
    """Lemmatize one lowercase alphabetic token.

    The exception table wins outright; otherwise the suffix cascade is
    iterated to a fixed point, which makes the mapping idempotent by
    construction."""
    hit = _exceptions().get(token)
    if hit is not None:
        return hit
    word = token
    while True:
        nxt = _exceptions().get(word, None)
        if nxt is not None:
            return nxt
        nxt = _apply_rules(word)
        if nxt == word:
            return word
        word = nxt


def lemmatize(tokens: list[str]) -> list[str]:
    return [lemmatize_token(t) for t in tokens]


def prepare(doc_id: str, raw: str, stoplist: frozenset[str] | None = None) -> CleanDoc:
    """Full pipeline: clean, tokenize, drop stop words, lemmatize.

    Lemmas that land back on a stop word are dropped so the output never
    intersects the active stop-word list."""
    if stoplist is None:
        stoplist = default_stopwords()
    tokens = remove_stopwords(tokenize(clean_text(raw)), stoplist)
    return CleanDoc(id=doc_id, tokens=tuple(t for t in lemmatize(tokens) if t not in stoplist))


def prepare_corpus(records, stoplist: frozenset[str] | None = None) -> list[CleanDoc]:
    """Prepare every record of a corpus (record.body) in corpus order."""
    return [prepare(rec.id, rec.body, stoplist) for rec in records]
