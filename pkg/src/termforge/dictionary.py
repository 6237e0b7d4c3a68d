"""Bilingual terminology dictionaries.

Dictionaries are built from dev-file JSONL (one segment per line with its
term list) and can be extended with generated term pairs. Lookup is
case-insensitive, whitespace-normalized and word-boundary aware.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator


ORIGIN_DEV = "dev-file"
ORIGIN_EXPANDED = "llm-expanded"
ORIGINS = (ORIGIN_DEV, ORIGIN_EXPANDED)

LANGUAGE_NAMES = {"en": "English", "de": "German", "es": "Spanish", "ru": "Russian"}
TARGET_CODES = ("de", "es", "ru")

_TAG_RE = re.compile(r"\[/?TERM\]")


class DictionaryError(ValueError):
    """Raised for malformed dictionary input."""

    def __init__(self, message: str, line: int | None = None, errors: list[str] | None = None):
        self.line = line
        self.errors = errors or []
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def normalize_ws(text: str) -> str:
    return " ".join(text.split())


def fold(text: str) -> str:
    """Case-fold and whitespace-normalize a term for matching."""
    return normalize_ws(text).lower()


def has_tag_markup(text: str) -> bool:
    return _TAG_RE.search(text) is not None


@dataclass(frozen=True, order=True)
class LanguagePair:
    source: str = "en"
    target: str = "de"

    def __post_init__(self):
        if self.source != "en":
            raise DictionaryError(f"unsupported source language {self.source!r}")
        if self.target not in TARGET_CODES:
            raise DictionaryError(f"unsupported target language {self.target!r}")

    @classmethod
    def parse(cls, code: "str | LanguagePair") -> "LanguagePair":
        if isinstance(code, LanguagePair):
            return code
        parts = code.strip().lower().replace("_", "-").split("-")
        if len(parts) != 2:
            raise DictionaryError(f"bad language pair {code!r}, expected e.g. 'en-de'")
        return cls(parts[0], parts[1])

    @property
    def code(self) -> str:
        return f"{self.source}-{self.target}"

    @property
    def target_name(self) -> str:
        return LANGUAGE_NAMES[self.target]

    def __str__(self) -> str:
        return self.code


ALL_DIRECTIONS = tuple(LanguagePair("en", t) for t in TARGET_CODES)


@dataclass(frozen=True)
class TermPair:
    source_term: str
    target_term: str
    repetition_id: int = 0
    origin: str = ORIGIN_DEV

    def __post_init__(self):
        for name in ("source_term", "target_term"):
            value = getattr(self, name)
            if not isinstance(value, str) or not value.strip():
                raise DictionaryError(f"{name} must be non-empty text")
            if value != value.strip():
                raise DictionaryError(f"{name} {value!r} has surrounding whitespace")
            if has_tag_markup(value):
                raise DictionaryError(f"{name} {value!r} contains tag markup")
        if self.repetition_id < 0:
            raise DictionaryError("repetition_id must be >= 0")
        if self.origin not in ORIGINS:
            raise DictionaryError(f"unknown origin {self.origin!r}")

    @property
    def key(self) -> tuple[str, str]:
        return (self.source_term, self.target_term)

    def to_json(self) -> dict:
        return {"src": self.source_term, "tgt": self.target_term}


@dataclass(frozen=True)
class TermDictionary:
    """Immutable set of term pairs, unique on (source_term, target_term)."""

    direction: LanguagePair
    entries: tuple[TermPair, ...] = ()
    index: dict[str, tuple[TermPair, ...]] = field(default_factory=dict, compare=False, repr=False)

    @classmethod
    def from_pairs(cls, direction: LanguagePair, pairs: Iterable[TermPair]) -> "TermDictionary":
        unique: dict[tuple[str, str], TermPair] = {}
        for pair in pairs:
            unique.setdefault(pair.key, pair)
        entries = tuple(sorted(unique.values(), key=lambda p: p.key))
        index: dict[str, list[TermPair]] = {}
        for pair in entries:
            index.setdefault(fold(pair.source_term), []).append(pair)
        return cls(direction, entries, {k: tuple(v) for k, v in index.items()})

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[TermPair]:
        return iter(self.entries)

    def __contains__(self, pair: object) -> bool:
        if not isinstance(pair, TermPair):
            return False
        return any(p.key == pair.key for p in self.index.get(fold(pair.source_term), ()))

    def get(self, source_term: str, target_term: str) -> TermPair | None:
        for pair in self.index.get(fold(source_term), ()):
            if pair.key == (source_term, target_term):
                return pair
        return None

    def candidates(self, source_term: str) -> tuple[TermPair, ...]:
        return self.index.get(fold(source_term), ())


def _require(obj: dict, key: str, kind: type, line: int):
    if key not in obj:
        raise DictionaryError(f"missing required field {key!r}", line)
    value = obj[key]
    if not isinstance(value, kind) or (kind is int and isinstance(value, bool)):
        raise DictionaryError(f"field {key!r} must be {kind.__name__}", line)
    return value


def _iter_jsonl(path: Path) -> Iterator[tuple[int, dict]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise DictionaryError(f"malformed JSON: {exc.msg}", lineno) from None
            if not isinstance(obj, dict):
                raise DictionaryError("expected a JSON object", lineno)
            yield lineno, obj


def load_dictionary(path: str | Path, direction: str | LanguagePair) -> TermDictionary:
    """Build a dictionary from a dev file.

    Each line is ``{"id", "source", "target", "terms": [{"src", "tgt"}]}``.
    ``repetition_id`` of a pair is the number of times it occurs in the file.
    """
    direction = LanguagePair.parse(direction)
    counts: dict[tuple[str, str], int] = {}
    for lineno, obj in _iter_jsonl(Path(path)):
        _require(obj, "id", int, lineno)
        _require(obj, "source", str, lineno)
        _require(obj, "target", str, lineno)
        terms = _require(obj, "terms", list, lineno)
        for term in terms:
            if not isinstance(term, dict):
                raise DictionaryError("term entries must be objects", lineno)
            src = _require(term, "src", str, lineno).strip()
            tgt = _require(term, "tgt", str, lineno).strip()
            if not src or not tgt:
                raise DictionaryError("empty term text", lineno)
            if has_tag_markup(src) or has_tag_markup(tgt):
                raise DictionaryError(f"term {src!r} -> {tgt!r} contains tag markup", lineno)
            counts[(src, tgt)] = counts.get((src, tgt), 0) + 1
    return TermDictionary.from_pairs(
        direction, (TermPair(s, t, n, ORIGIN_DEV) for (s, t), n in counts.items())
    )


def dump_dictionary(d: TermDictionary) -> str:
    lines = [
        json.dumps(
            {"src": p.source_term, "tgt": p.target_term, "repetition_id": p.repetition_id, "origin": p.origin},
            ensure_ascii=False,
        )
        for p in d.entries
    ]
    return "".join(line + "\n" for line in lines)


def read_dictionary(path: str | Path, direction: str | LanguagePair) -> TermDictionary:
    """Load a dictionary written by :func:`dump_dictionary`."""
    direction = LanguagePair.parse(direction)
    pairs = []
    for lineno, obj in _iter_jsonl(Path(path)):
        try:
            pairs.append(
                TermPair(
                    _require(obj, "src", str, lineno),
                    _require(obj, "tgt", str, lineno),
                    obj.get("repetition_id", 0),
                    obj.get("origin", ORIGIN_DEV),
                )
            )
        except DictionaryError as exc:
            if exc.line is None:
                raise DictionaryError(str(exc), lineno) from None
            raise
    return TermDictionary.from_pairs(direction, pairs)


def merge_expansions(d: TermDictionary, expanded: Iterable[TermPair | tuple[str, str]]) -> TermDictionary:
    """Add generated term pairs; existing pairs keep their origin.

    Raises :class:`DictionaryError` listing every rejected item if any
    expansion carries tag markup or is otherwise invalid.
    """
    errors: list[str] = []
    new_pairs: list[TermPair] = []
    for i, item in enumerate(expanded):
        if isinstance(item, TermPair):
            src, tgt, rep = item.source_term, item.target_term, item.repetition_id
        else:
            src, tgt = item
            rep = 0
        try:
            new_pairs.append(TermPair(src, tgt, rep, ORIGIN_EXPANDED))
        except DictionaryError as exc:
            errors.append(f"item {i}: {exc}")
    if errors:
        raise DictionaryError(f"{len(errors)} invalid expansion(s)", errors=errors)
    existing = {p.key for p in d.entries}
    merged = list(d.entries)
    for pair in new_pairs:
        if pair.key not in existing:
            existing.add(pair.key)
            merged.append(replace(pair))
    return TermDictionary.from_pairs(d.direction, merged)


def lookup(d: TermDictionary, source_text: str) -> list[TermPair]:
    """Entries whose source term occurs in ``source_text``.

    Containment is plain substring search on case-folded,
    whitespace-normalized text. Longest source terms come first; equal
    lengths are ordered lexicographically.
    """
    norm = fold(source_text)
    found: list[TermPair] = []
    for key, pairs in d.index.items():
        if key in norm:
            found.extend(pairs)
    found.sort(key=lambda p: (-len(p.source_term), p.source_term, p.target_term))
    return found


def contains_term(norm_text: str, folded_term: str) -> bool:
    """Boundary-aware containment of an already folded term in folded text."""
    if not folded_term:
        return False
    start = norm_text.find(folded_term)
    while start != -1:
        end = start + len(folded_term)
        if (start == 0 or not norm_text[start - 1].isalnum()) and (
            end == len(norm_text) or not norm_text[end].isalnum()
        ):
            return True
        start = norm_text.find(folded_term, start + 1)
    return False
