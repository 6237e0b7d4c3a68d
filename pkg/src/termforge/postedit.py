"""LLM post-editing of draft translations under terminology modes."""

from __future__ import annotations

import enum
import hashlib
import json
import logging
import random
from dataclasses import dataclass, field, replace
from typing import Sequence

from .backend import GenerationRequest, TextGenBackend
from .dictionary import LanguagePair, TermDictionary, TermPair, fold, has_tag_markup, lookup
from .prompts import POSTEDIT_NOTERMS_TEMPLATE, POSTEDIT_TERMS_TEMPLATE, render
from .tagging import contains_normalized, strip_tags, verify_tags

log = logging.getLogger(__name__)

POSTEDIT_TEMPERATURE = 0.3


class TerminologyMode(str, enum.Enum):
    PROPER = "proper"
    RANDOM = "random"
    NOTERM = "noterm"

    def __str__(self) -> str:
        return self.value


class PostEditError(ValueError):
    pass


@dataclass(frozen=True)
class TranslationRecord:
    segment_id: int
    direction: LanguagePair
    mode: TerminologyMode
    source: str
    draft: str
    hypothesis: str = ""
    required_terms: tuple[TermPair, ...] = ()

    def __post_init__(self):
        if self.mode == TerminologyMode.NOTERM and self.required_terms:
            raise PostEditError("noterm records cannot carry required terms")

    def to_submission(self) -> dict:
        return {
            "id": self.segment_id,
            "lang": self.direction.code,
            "mode": self.mode.value,
            "source": self.source,
            "hypothesis": self.hypothesis,
            "terms": [t.to_json() for t in self.required_terms],
        }

    @classmethod
    def from_submission(cls, obj: dict) -> "TranslationRecord":
        return cls(
            segment_id=obj["id"],
            direction=LanguagePair.parse(obj["lang"]),
            mode=TerminologyMode(obj["mode"]),
            source=obj["source"],
            draft=obj.get("draft", ""),
            hypothesis=obj["hypothesis"],
            required_terms=tuple(TermPair(t["src"], t["tgt"]) for t in obj.get("terms", [])),
        )


def _segment_rng(seed: int, source: str) -> random.Random:
    digest = hashlib.sha256(f"{seed}\x00{source}".encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def resolve_terms(source: str, mode: TerminologyMode | str, proper_db: TermDictionary | None,
                  random_db: TermDictionary | None, seed: int = 0) -> list[TermPair]:
    """Required term pairs for one segment under ``mode``.

    ``random`` draws one pair per matched source term from ``random_db``;
    the draw depends only on ``seed`` and the segment text.
    """
    mode = TerminologyMode(mode)
    if mode == TerminologyMode.NOTERM:
        return []
    if mode == TerminologyMode.PROPER:
        return lookup(proper_db, source) if proper_db is not None else []
    if random_db is None:
        return []
    rng = _segment_rng(seed, source)
    chosen: list[TermPair] = []
    seen: set[str] = set()
    for pair in lookup(random_db, source):
        key = fold(pair.source_term)
        if key in seen:
            continue
        seen.add(key)
        options = random_db.candidates(pair.source_term)
        chosen.append(options[rng.randrange(len(options))] if len(options) > 1 else options[0])
    return chosen


def render_term_str(terms: Sequence[TermPair]) -> str:
    return ", ".join(
        f"{json.dumps(t.source_term, ensure_ascii=False)}: {json.dumps(t.target_term, ensure_ascii=False)}"
        for t in terms
    )


def build_postedit_prompt(rec: TranslationRecord) -> str:
    if not rec.draft.strip():
        raise PostEditError(f"segment {rec.segment_id}: empty draft")
    values = {
        "target_lang": rec.direction.target_name,
        "source": rec.source,
        "translation": rec.draft,
    }
    if rec.required_terms:
        values["term_str"] = render_term_str(rec.required_terms)
        return render(POSTEDIT_TERMS_TEMPLATE, values)
    return render(POSTEDIT_NOTERMS_TEMPLATE, values)


def missing_terms(hypothesis: str, terms: Sequence[TermPair]) -> list[str]:
    """Target terms absent from the tag-stripped hypothesis (case-insensitive, word-bounded)."""
    text = strip_tags(hypothesis).text
    return [t.target_term for t in terms if not contains_normalized(text, t.target_term)]


def validate_hypothesis(rec: TranslationRecord, hypothesis: str, stats: "PostEditStats | None" = None) -> list[str]:
    """Reasons ``hypothesis`` is unacceptable for ``rec``; empty when it passes."""
    if not hypothesis.strip():
        return ["empty-hypothesis"]
    reasons = []
    if has_tag_markup(rec.draft):
        report = verify_tags(hypothesis)
        if not report.ok:
            reasons.append("tag-integrity")
    elif has_tag_markup(hypothesis):
        reasons.append("unexpected-tags")
    if rec.required_terms:
        if stats is not None:
            stats.term_checks += 1
        reasons.extend(f"missing-term: {t}" for t in missing_terms(hypothesis, rec.required_terms))
    return reasons


@dataclass
class PostEditStats:
    requests: int = 0
    retries: int = 0
    term_checks: int = 0


@dataclass(frozen=True)
class RejectedRecord:
    record: TranslationRecord
    reasons: tuple[str, ...]


@dataclass
class PostEditResult:
    accepted: list[TranslationRecord]
    rejected: list[RejectedRecord]
    stats: PostEditStats = field(default_factory=PostEditStats)


def postedit_batch(recs: Sequence[TranslationRecord], backend: TextGenBackend, *,
                   temperature: float = POSTEDIT_TEMPERATURE, parallelism: int = 4,
                   retries: int = 1) -> PostEditResult:
    """Post-edit every record; each hypothesis must pass validation to be accepted.

    Failed records are resubmitted with the same prompt up to ``retries``
    times. Output order follows input order.
    """
    stats = PostEditStats()
    pending = list(range(len(recs)))
    last_reasons: dict[int, tuple[str, ...]] = {}
    done: dict[int, TranslationRecord] = {}
    prompts: dict[int, str] = {}
    for i, rec in enumerate(recs):
        try:
            prompts[i] = build_postedit_prompt(rec)
        except PostEditError:
            last_reasons[i] = ("empty-draft",)
    pending = [i for i in pending if i in prompts]

    for attempt in range(retries + 1):
        if not pending:
            break
        if attempt:
            stats.retries += len(pending)
        reqs = [GenerationRequest(prompts[i], temperature, 1, f"{recs[i].direction.code}:{recs[i].mode.value}:{i}:{attempt}")
                for i in pending]
        stats.requests += len(reqs)
        outcome = backend.generate_batch(reqs, parallelism)
        by_id = outcome.by_id()
        still: list[int] = []
        for i, req in zip(pending, reqs):
            if req.request_id in outcome.errors:
                last_reasons[i] = (f"backend-error: {outcome.errors[req.request_id]}",)
                still.append(i)
                continue
            hyp = by_id[req.request_id].completions[0].strip()
            reasons = validate_hypothesis(recs[i], hyp, stats)
            if reasons:
                last_reasons[i] = tuple(reasons)
                still.append(i)
            else:
                done[i] = replace(recs[i], hypothesis=hyp)
        pending = still

    accepted = [done[i] for i in range(len(recs)) if i in done]
    rejected = [RejectedRecord(recs[i], last_reasons[i]) for i in range(len(recs)) if i not in done]
    log.info("post-edit: %d accepted, %d rejected, %d retries", len(accepted), len(rejected), stats.retries)
    return PostEditResult(accepted, rejected, stats)


def make_records(drafts: Sequence[dict], direction: LanguagePair, mode: TerminologyMode | str,
                 proper_db: TermDictionary | None, random_db: TermDictionary | None,
                 seed: int = 0) -> list[TranslationRecord]:
    """Turn draft rows ``{"id", "source", "draft"}`` into records with resolved terms."""
    mode = TerminologyMode(mode)
    return [
        TranslationRecord(
            segment_id=row["id"],
            direction=direction,
            mode=mode,
            source=row["source"],
            draft=row["draft"],
            required_terms=tuple(resolve_terms(row["source"], mode, proper_db, random_db, seed)),
        )
        for row in drafts
    ]


def dump_submission(records: Sequence[TranslationRecord]) -> str:
    return "".join(json.dumps(r.to_submission(), ensure_ascii=False) + "\n" for r in records)


def submission_filename(direction: LanguagePair, mode: TerminologyMode | str) -> str:
    return f"{direction.code}.{TerminologyMode(mode).value}.jsonl"

