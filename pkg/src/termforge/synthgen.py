"""Synthetic tagged parallel data: prompts, sampling plans and strict parsing."""

from __future__ import annotations

import json
import logging
import random
import re
from collections import Counter
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from .backend import GenerationRequest, TextGenBackend
from .dictionary import LANGUAGE_NAMES, LanguagePair, TermDictionary, TermPair, fold
from .prompts import MULTI_TERM_TEMPLATE, SINGLE_TERM_TEMPLATE, render
from .tagging import TaggedSegment, TagError, strip_tags

log = logging.getLogger(__name__)

SINGLE = "single-term"
MULTI = "multi-term"
GEN_MODES = (SINGLE, MULTI)
TEMPERATURE_RANGE = (0.3, 0.7)


class GenerationError(ValueError):
    pass


@dataclass(frozen=True)
class ParallelPair:
    source: TaggedSegment
    target: TaggedSegment
    direction: LanguagePair
    terms_used: tuple[TermPair, ...]
    gen_mode: str
    temperature: float
    qe_score: float | None = None

    def check(self) -> None:
        """Raise ``GenerationError`` if any structural invariant is broken."""
        self.source.check()
        self.target.check()
        ns, nt = len(self.source.spans), len(self.target.spans)
        if ns != nt:
            raise GenerationError(f"span counts differ: {ns} vs {nt}")
        if self.gen_mode == SINGLE:
            if ns != 1:
                raise GenerationError(f"single-term pair has {ns} spans")
        elif self.gen_mode == MULTI:
            if not 2 <= len(self.terms_used) <= 3 or ns != len(self.terms_used):
                raise GenerationError(f"multi-term pair has {ns} spans for {len(self.terms_used)} terms")
        else:
            raise GenerationError(f"unknown gen_mode {self.gen_mode!r}")
        if self.qe_score is not None and not 0.0 <= self.qe_score <= 1.0:
            raise GenerationError(f"qe_score {self.qe_score} outside [0, 1]")

    def to_json(self) -> dict:
        obj = {
            "src_tagged": self.source.text,
            "tgt_tagged": self.target.text,
            "lang": self.direction.code,
            "gen_mode": self.gen_mode,
            "terms": [t.to_json() for t in self.terms_used],
            "temperature": self.temperature,
        }
        if self.qe_score is not None:
            obj["qe_score"] = self.qe_score
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "ParallelPair":
        try:
            return cls(
                source=TaggedSegment.parse(obj["src_tagged"]),
                target=TaggedSegment.parse(obj["tgt_tagged"]),
                direction=LanguagePair.parse(obj["lang"]),
                terms_used=tuple(TermPair(t["src"], t["tgt"]) for t in obj["terms"]),
                gen_mode=obj["gen_mode"],
                temperature=float(obj["temperature"]),
                qe_score=obj.get("qe_score"),
            )
        except (KeyError, TypeError) as exc:
            raise GenerationError(f"bad corpus record: {exc!r}") from None


def _lang_name(target_lang: str | LanguagePair) -> str:
    if isinstance(target_lang, LanguagePair):
        return target_lang.target_name
    return LANGUAGE_NAMES.get(target_lang.lower(), target_lang)


def build_single_term_prompt(term: TermPair, target_lang: str | LanguagePair, n: int) -> str:
    if n < 1:
        raise GenerationError("n must be >= 1")
    return render(SINGLE_TERM_TEMPLATE, {
        "n": n,
        "source_term": term.source_term,
        "target_term": term.target_term,
        "target_lang": _lang_name(target_lang),
    })


def build_multi_term_prompt(terms: Sequence[TermPair], target_lang: str | LanguagePair, n: int) -> str:
    if not 2 <= len(terms) <= 3:
        raise GenerationError(f"multi-term prompts take 2-3 terms, got {len(terms)}")
    if n < 1:
        raise GenerationError("n must be >= 1")
    terms_str = "\n".join(f"{t.source_term} : {t.target_term}" for t in terms)
    return render(MULTI_TERM_TEMPLATE, {"n": n, "terms_str": terms_str, "target_lang": _lang_name(target_lang)})


@dataclass(frozen=True)
class PlanItem:
    gen_mode: str
    terms: tuple[TermPair, ...]
    temperature: float


def sample_generation_plan(d: TermDictionary, count: int, seed: int, *, single_ratio: float = 0.7,
                           temperature_range: tuple[float, float] = TEMPERATURE_RANGE) -> list[PlanItem]:
    """Draw ``count`` generation jobs: mode, terms and sampling temperature."""
    if count < 1:
        raise GenerationError("count must be >= 1")
    if not 0.0 <= single_ratio <= 1.0:
        raise GenerationError("single_ratio must be in [0, 1]")
    lo, hi = temperature_range
    if not 0.0 <= lo <= hi <= 1.0:
        raise GenerationError(f"bad temperature range {temperature_range}")
    entries = list(d.entries)
    if not entries:
        raise GenerationError("dictionary is empty")
    if single_ratio < 1.0 and len(entries) < 3:
        raise GenerationError(f"multi-term items need >= 3 dictionary entries, have {len(entries)}")
    rng = random.Random(seed)
    plan = []
    for _ in range(count):
        if rng.random() < single_ratio:
            mode, terms = SINGLE, (rng.choice(entries),)
        else:
            mode, terms = MULTI, tuple(rng.sample(entries, rng.choice((2, 3))))
        plan.append(PlanItem(mode, terms, rng.uniform(lo, hi)))
    return plan


def build_prompt(item: PlanItem, direction: LanguagePair, n: int) -> str:
    if item.gen_mode == SINGLE:
        return build_single_term_prompt(item.terms[0], direction, n)
    return build_multi_term_prompt(item.terms, direction, n)


# --- parsing ---------------------------------------------------------------

_ENUM = r"\s*(?:\d+[.)]\s*|[-*]\s+)?"
_EN_LINE = re.compile(_ENUM + r"EN\s*:\s?(.*)$", re.I)
_LABEL_LINE = re.compile(_ENUM + r"([^:]{1,40}?)\s*:\s?(.*)$")


@dataclass(frozen=True)
class Rejection:
    lines: tuple[int, int]
    reason: str


def _labels(target_lang: str | LanguagePair) -> set[str]:
    name = _lang_name(target_lang)
    labels = {name.lower(), f"({name.lower()})", "{target_lang}"}
    if isinstance(target_lang, LanguagePair):
        labels.add(target_lang.target)
    else:
        for code, lang in LANGUAGE_NAMES.items():
            if lang == name:
                labels.add(code)
    return labels


def _direction_for(target_lang: str | LanguagePair) -> LanguagePair:
    if isinstance(target_lang, LanguagePair):
        return target_lang
    name = _lang_name(target_lang)
    for code, lang in LANGUAGE_NAMES.items():
        if lang == name and code != "en":
            return LanguagePair("en", code)
    raise GenerationError(f"unknown target language {target_lang!r}")


def _spans_match(found: Iterable[str], wanted: Iterable[str]) -> bool:
    return Counter(fold(x) for x in found) == Counter(fold(x) for x in wanted)


def _check_side(text: str, side: str) -> tuple[TaggedSegment | None, str | None]:
    stripped = strip_tags(text)
    if not stripped.text.strip():
        return None, f"empty-{side}"
    if not stripped.report.ok:
        return None, f"malformed-{side}-tags"
    if stripped.report.span_count == 0:
        return None, f"missing-{side}-tag"
    try:
        return TaggedSegment.parse(text), None
    except TagError:
        return None, f"malformed-{side}-tags"


def parse_generation_output(raw: str, target_lang: str | LanguagePair, expected_n: int,
                            expected_terms: Sequence[TermPair], *, temperature: float = 0.0,
                            gen_mode: str | None = None) -> tuple[list[ParallelPair], list[Rejection]]:
    """Strictly parse ``EN:`` / ``<lang>:`` line pairs out of raw model output.

    Every candidate block ends up either accepted or rejected with a
    reason; stray text forms its own rejected block. Line numbers are 1-based.
    """
    direction = _direction_for(target_lang)
    labels = _labels(target_lang)
    if gen_mode is None:
        gen_mode = SINGLE if len(expected_terms) == 1 else MULTI
    want_src = [t.source_term for t in expected_terms]
    want_tgt = [t.target_term for t in expected_terms]

    lines = raw.splitlines()
    blocks: list[tuple[int, int, str | None, str | None]] = []  # start, end, en, target line
    i = 0
    chatter_start: int | None = None

    def close_chatter(end: int) -> None:
        nonlocal chatter_start
        if chatter_start is not None:
            blocks.append((chatter_start, end, None, None))
            chatter_start = None

    while i < len(lines):
        line = lines[i]
        if not line.strip():
            i += 1
            continue
        m = _EN_LINE.match(line)
        if not m:
            if chatter_start is None:
                chatter_start = i
            i += 1
            continue
        close_chatter(_last_nonblank(lines, chatter_start, i) if chatter_start is not None else i)
        j = i + 1
        while j < len(lines) and not lines[j].strip():
            j += 1
        if j < len(lines) and not _EN_LINE.match(lines[j]):
            blocks.append((i, j, m.group(1).strip(), lines[j]))
            i = j + 1
        else:
            blocks.append((i, i, m.group(1).strip(), None))
            i = j
    if chatter_start is not None:
        close_chatter(_last_nonblank(lines, chatter_start, len(lines)))

    accepted: list[ParallelPair] = []
    rejected: list[Rejection] = []
    for start, end, en, tgt_line in blocks:
        span = (start + 1, end + 1)
        if en is None:
            rejected.append(Rejection(span, "unparseable-text"))
            continue
        if tgt_line is None:
            rejected.append(Rejection(span, "missing-target-line"))
            continue
        lm = _LABEL_LINE.match(tgt_line)
        if not lm or lm.group(1).strip().lower() not in labels:
            rejected.append(Rejection(span, "bad-target-label"))
            continue
        src_seg, reason = _check_side(en, "source")
        if reason is None:
            tgt_seg, reason = _check_side(lm.group(2).strip(), "target")
        if reason is not None:
            rejected.append(Rejection(span, reason))
            continue
        if len(src_seg.spans) != len(want_src) or len(tgt_seg.spans) != len(want_tgt):
            rejected.append(Rejection(span, "span-count-mismatch"))
            continue
        if not _spans_match(src_seg.span_texts, want_src) or not _spans_match(tgt_seg.span_texts, want_tgt):
            rejected.append(Rejection(span, "term-mismatch"))
            continue
        if len(accepted) >= expected_n:
            rejected.append(Rejection(span, "excess-pair"))
            continue
        pair = ParallelPair(src_seg, tgt_seg, direction, tuple(expected_terms), gen_mode, temperature)
        try:
            pair.check()
        except (GenerationError, TagError) as exc:
            rejected.append(Rejection(span, f"invariant: {exc}"))
            continue
        accepted.append(pair)
    return accepted, rejected


def _last_nonblank(lines: list[str], start: int, stop: int) -> int:
    end = start
    for k in range(start, stop):
        if lines[k].strip():
            end = k
    return end


@dataclass
class GenerationReport:
    pairs: list[ParallelPair]
    prompts: int
    rejected: int
    failed_requests: int


def generate_corpus(d: TermDictionary, backend: TextGenBackend, count: int, seed: int, *,
                    pairs_per_prompt: int = 5, single_ratio: float = 0.7,
                    temperature_range: tuple[float, float] = TEMPERATURE_RANGE,
                    parallelism: int = 4) -> GenerationReport:
    """Plan, prompt, generate and parse ``count`` jobs for one direction."""
    plan = sample_generation_plan(d, count, seed, single_ratio=single_ratio, temperature_range=temperature_range)
    reqs = [
        GenerationRequest(build_prompt(item, d.direction, pairs_per_prompt), item.temperature, 1,
                          f"{d.direction.code}-{seed}-{k}")
        for k, item in enumerate(plan)
    ]
    outcome = backend.generate_batch(reqs, parallelism)
    by_id = outcome.by_id()
    pairs: list[ParallelPair] = []
    n_rejected = 0
    for req, item in zip(reqs, plan):
        result = by_id.get(req.request_id)
        if result is None:
            continue
        for raw in result.completions:
            ok, bad = parse_generation_output(raw, d.direction, pairs_per_prompt, item.terms,
                                              temperature=item.temperature, gen_mode=item.gen_mode)
            pairs.extend(ok)
            n_rejected += len(bad)
    log.info("%s: %d prompts, %d pairs accepted, %d rejected, %d failed requests",
             d.direction.code, len(reqs), len(pairs), n_rejected, len(outcome.errors))
    return GenerationReport(pairs, len(reqs), n_rejected, len(outcome.errors))


def dump_corpus(pairs: Iterable[ParallelPair]) -> str:
    return "".join(json.dumps(p.to_json(), ensure_ascii=False) + "\n" for p in pairs)


def load_corpus(text: str) -> list[ParallelPair]:
    pairs = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            pairs.append(ParallelPair.from_json(json.loads(line)))
        except (json.JSONDecodeError, GenerationError, TagError, ValueError) as exc:
            raise GenerationError(f"line {lineno}: {exc}") from None
    return pairs


def with_score(pair: ParallelPair, score: float) -> ParallelPair:
    return replace(pair, qe_score=score)
