"""``[TERM]...[/TERM]`` markup: stripping, span detection, re-tagging, checks."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

from . import kernels
from .dictionary import TermDictionary, TermPair, contains_term, fold

OPEN_TAG = "[TERM]"
CLOSE_TAG = "[/TERM]"
_TAG_TOKEN = re.compile(r"\[(/?)TERM\]")

Span = tuple[int, int, str]


class TagError(ValueError):
    pass


@dataclass(frozen=True)
class TagReport:
    balanced: bool
    nested: bool
    orphan_open: int
    orphan_close: int
    span_count: int

    @property
    def ok(self) -> bool:
        return self.balanced and not self.nested


class Stripped(NamedTuple):
    text: str
    spans: list[Span]
    report: TagReport


def verify_tags(text: str) -> TagReport:
    depth = 0
    max_depth = 0
    orphan_close = 0
    pairs = 0
    for m in _TAG_TOKEN.finditer(text):
        if m.group(1):
            if depth == 0:
                orphan_close += 1
            else:
                depth -= 1
                pairs += 1
        else:
            depth += 1
            max_depth = max(max_depth, depth)
    return TagReport(
        balanced=depth == 0 and orphan_close == 0,
        nested=max_depth > 1,
        orphan_open=depth,
        orphan_close=orphan_close,
        span_count=pairs,
    )


def strip_tags(text: str) -> Stripped:
    """Remove all tag tokens and recover the tagged regions.

    Spans are offsets into the stripped text. When the markup is unbalanced or
    nested the span list is empty and the report says why.
    """
    report = verify_tags(text)
    pieces: list[str] = []
    spans: list[Span] = []
    pos = 0
    out_len = 0
    open_at: int | None = None
    for m in _TAG_TOKEN.finditer(text):
        chunk = text[pos:m.start()]
        pieces.append(chunk)
        out_len += len(chunk)
        pos = m.end()
        if m.group(1):
            if open_at is not None:
                spans.append((open_at, out_len, ""))
                open_at = None
        else:
            open_at = out_len
    pieces.append(text[pos:])
    stripped = "".join(pieces)
    if not report.ok:
        return Stripped(stripped, [], report)
    return Stripped(stripped, [(s, e, stripped[s:e]) for s, e, _ in spans], report)


def insert_tags(text: str, spans: Iterable[tuple[int, int]]) -> str:
    """Wrap each (start, end) region of tag-free ``text`` in tags."""
    out: list[str] = []
    pos = 0
    for start, end, *_ in sorted(spans):
        if start < pos or end < start or end > len(text):
            raise TagError(f"invalid span ({start}, {end})")
        out.append(text[pos:start])
        out.append(OPEN_TAG + text[start:end] + CLOSE_TAG)
        pos = end
    out.append(text[pos:])
    return "".join(out)


@dataclass(frozen=True)
class TaggedSegment:
    text: str
    stripped: str
    spans: tuple[Span, ...]

    @classmethod
    def parse(cls, text: str) -> "TaggedSegment":
        result = strip_tags(text)
        if not result.report.ok:
            raise TagError(f"malformed tags in {text!r}: {result.report}")
        return cls(text, result.text, tuple(result.spans))

    @classmethod
    def from_spans(cls, stripped: str, spans: Iterable[tuple[int, int]]) -> "TaggedSegment":
        ordered = sorted((s, e) for s, e, *_ in spans)
        return cls(insert_tags(stripped, ordered), stripped, tuple((s, e, stripped[s:e]) for s, e in ordered))

    @property
    def span_texts(self) -> list[str]:
        return [t for _, _, t in self.spans]

    def check(self) -> None:
        prev_end = -1
        for start, end, term in self.spans:
            if start < prev_end or start > end:
                raise TagError("spans overlap or are out of order")
            if self.stripped[start:end] != term:
                raise TagError(f"span text mismatch at ({start}, {end})")
            prev_end = end
        if insert_tags(self.stripped, self.spans) != self.text:
            raise TagError("tagged text does not match spans")


def _side_term(pair: TermPair, side: str) -> str:
    if side == "source":
        return pair.source_term
    if side == "target":
        return pair.target_term
    raise ValueError(f"side must be 'source' or 'target', not {side!r}")


def _build_table(terms: Iterable[TermPair], side: str) -> tuple[dict[str, int], list[int], list[TermPair]]:
    # equal folded strings resolve to the lexicographically smallest pair
    best: dict[str, TermPair] = {}
    for pair in terms:
        key = fold(_side_term(pair, side))
        cur = best.get(key)
        if cur is None or (pair.source_term, pair.target_term) < (cur.source_term, cur.target_term):
            best[key] = pair
    chosen = list(best.values())
    table = {fold(_side_term(p, side)): i for i, p in enumerate(chosen)}
    lengths = sorted({len(k) for k in table}, reverse=True)
    return table, lengths, chosen


def find_term_spans(text: str, terms: Sequence[TermPair], side: str = "source") -> list[tuple[int, int, TermPair]]:
    """Greedy left-to-right, longest-first term detection.

    Matching is case-insensitive and whitespace-normalized, and only at
    word boundaries. Offsets address ``text`` itself, so original casing
    and spacing are untouched.
    """
    if not terms:
        return []
    table, lengths, chosen = _build_table(terms, side)
    norm, offsets = kernels.normalize_with_offsets(text)
    return [
        (offsets[a], offsets[b - 1] + 1, chosen[k])
        for a, b, k in kernels.scan_spans(norm, table, lengths)
    ]


@dataclass(frozen=True)
class RetagWarning:
    kind: str
    source_term: str
    target_term: str
    source_count: int
    target_count: int

    def __str__(self) -> str:
        return (
            f"{self.kind}: {self.source_term!r} x{self.source_count} vs "
            f"{self.target_term!r} x{self.target_count}"
        )


def retag_pair(
    source: str, target: str, d: TermDictionary | Sequence[TermPair]
) -> tuple[TaggedSegment, TaggedSegment, list[RetagWarning]]:
    """Re-derive tags on both sides from the dictionary.

    A term is tagged only when it is found on both sides; the k-th source
    occurrence pairs with the k-th target occurrence. Stale tags are removed
    first, so the function is idempotent.
    """
    result = retag_pair_detail(source, target, d)
    return result.source, result.target, result.warnings


class Retagged(NamedTuple):
    source: TaggedSegment
    target: TaggedSegment
    warnings: list[RetagWarning]
    tagged_terms: list[TermPair]


def retag_pair_detail(source: str, target: str, d: TermDictionary | Sequence[TermPair]) -> Retagged:
    """:func:`retag_pair` plus the term pair behind each source tag, in text order."""
    src_text = strip_tags(source).text
    tgt_text = strip_tags(target).text
    entries = list(d.entries if isinstance(d, TermDictionary) else d)
    src_hits = find_term_spans(src_text, entries, "source")
    if not src_hits:
        return Retagged(TaggedSegment(src_text, src_text, ()), TaggedSegment(tgt_text, tgt_text, ()), [], [])

    matched = list({p.key: p for _, _, p in src_hits}.values())
    tgt_hits = find_term_spans(tgt_text, matched, "target")

    by_target_src: dict[str, list[tuple[int, int, TermPair]]] = {}
    for hit in src_hits:
        by_target_src.setdefault(fold(hit[2].target_term), []).append(hit)
    by_target_tgt: dict[str, list[tuple[int, int, TermPair]]] = {}
    for hit in tgt_hits:
        by_target_tgt.setdefault(fold(hit[2].target_term), []).append(hit)

    src_tagged: list[tuple[int, int, TermPair]] = []
    tgt_spans: list[tuple[int, int]] = []
    warnings: list[RetagWarning] = []
    for key, s_hits in by_target_src.items():
        t_hits = by_target_tgt.get(key, [])
        k = min(len(s_hits), len(t_hits))
        src_tagged.extend(s_hits[:k])
        tgt_spans.extend((a, b) for a, b, _ in t_hits[:k])
        if len(s_hits) != len(t_hits):
            pair = s_hits[0][2]
            kind = "missing-target-term" if len(s_hits) > len(t_hits) else "extra-target-term"
            warnings.append(RetagWarning(kind, pair.source_term, pair.target_term, len(s_hits), len(t_hits)))
    src_tagged.sort(key=lambda h: h[0])
    return Retagged(
        TaggedSegment.from_spans(src_text, [(a, b) for a, b, _ in src_tagged]),
        TaggedSegment.from_spans(tgt_text, tgt_spans),
        warnings,
        [p for _, _, p in src_tagged],
    )


def contains_normalized(text: str, term: str, case_sensitive: bool = False, boundary: bool = True) -> bool:
    """Whether ``term`` occurs in ``text`` after whitespace normalization."""
    if case_sensitive:
        hay = " ".join(text.split())
        needle = " ".join(term.split())
    else:
        hay, _ = kernels.normalize_with_offsets(text)
        needle = fold(term)
    if not boundary:
        return bool(needle) and needle in hay
    return contains_term(hay, needle)
