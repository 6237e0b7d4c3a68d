"""Corpus BLEU, chrF2++ and terminology success rates, plus report rendering."""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

from . import kernels
from .dictionary import LanguagePair, TermDictionary
from .postedit import TerminologyMode, TranslationRecord, resolve_terms
from .tagging import strip_tags

_PUNCT = re.compile(r"([^\w\s])")

MODE_ORDER = (TerminologyMode.NOTERM, TerminologyMode.PROPER, TerminologyMode.RANDOM)


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class MetricConfig:
    bleu_max_order: int = 4
    chrf_char_order: int = 6
    chrf_word_order: int = 2
    chrf_beta: float = 2.0
    term_match_policy: str = "exact-case"

    def __post_init__(self):
        if self.bleu_max_order < 1 or self.chrf_char_order < 1 or self.chrf_word_order < 0:
            raise MetricError("n-gram orders must be >= 1")
        if self.chrf_beta <= 0:
            raise MetricError("chrf_beta must be positive")
        if self.term_match_policy not in ("exact-case", "case-insensitive"):
            raise MetricError(f"unknown term_match_policy {self.term_match_policy!r}")


def tokenize(text: str) -> list[str]:
    """Whitespace split after isolating every punctuation character."""
    return _PUNCT.sub(r" \1 ", text).split()


def _check_corpus(hyps: Sequence[str], refs: Sequence[str]) -> None:
    if len(hyps) != len(refs):
        raise MetricError(f"{len(hyps)} hypotheses vs {len(refs)} references")
    if not hyps:
        raise MetricError("empty corpus")


@dataclass
class BleuStats:
    matches: list[int]
    totals: list[int]
    hyp_len: int = 0
    ref_len: int = 0

    def __add__(self, other: "BleuStats") -> "BleuStats":
        return BleuStats(
            [a + b for a, b in zip(self.matches, other.matches)],
            [a + b for a, b in zip(self.totals, other.totals)],
            self.hyp_len + other.hyp_len,
            self.ref_len + other.ref_len,
        )

    def score(self) -> float:
        if self.hyp_len == 0 or any(t == 0 or m == 0 for m, t in zip(self.matches, self.totals)):
            return 0.0
        order = len(self.matches)
        log_p = sum(math.log(m / t) for m, t in zip(self.matches, self.totals)) / order
        bp = 1.0 if self.hyp_len > self.ref_len else math.exp(1 - self.ref_len / self.hyp_len)
        return 100.0 * bp * math.exp(log_p)


def bleu_stats(hyps: Sequence[str], refs: Sequence[str], max_order: int = 4) -> BleuStats:
    stats = BleuStats([0] * max_order, [0] * max_order)
    for hyp, ref in zip(hyps, refs):
        h, r = tokenize(hyp), tokenize(ref)
        stats.hyp_len += len(h)
        stats.ref_len += len(r)
        for n in range(1, max_order + 1):
            stats.matches[n - 1] += kernels.clipped_matches(kernels.ngram_counts(h, n), kernels.ngram_counts(r, n))
            stats.totals[n - 1] += max(len(h) - n + 1, 0)
    return stats


def corpus_bleu(hyps: Sequence[str], refs: Sequence[str], cfg: MetricConfig = MetricConfig()) -> float:
    """Corpus BLEU in [0, 100]: uniform-weight geometric mean of clipped
    n-gram precisions times the brevity penalty. No smoothing."""
    _check_corpus(hyps, refs)
    return bleu_stats(hyps, refs, cfg.bleu_max_order).score()


def chrf_stats(hyps: Sequence[str], refs: Sequence[str], char_order: int = 6,
               word_order: int = 2) -> list[list[int]]:
    """Per n-gram type ``[hyp_count, ref_count, matches]``; char orders first, then word orders."""
    stats = [[0, 0, 0] for _ in range(char_order + word_order)]
    for hyp, ref in zip(hyps, refs):
        hc, rc = "".join(hyp.split()), "".join(ref.split())
        for n in range(1, char_order + 1):
            hg, rg = kernels.ngram_counts(hc, n), kernels.ngram_counts(rc, n)
            row = stats[n - 1]
            row[0] += max(len(hc) - n + 1, 0)
            row[1] += max(len(rc) - n + 1, 0)
            row[2] += kernels.clipped_matches(hg, rg)
        hw, rw = tokenize(hyp), tokenize(ref)
        for n in range(1, word_order + 1):
            row = stats[char_order + n - 1]
            row[0] += max(len(hw) - n + 1, 0)
            row[1] += max(len(rw) - n + 1, 0)
            row[2] += kernels.clipped_matches(kernels.ngram_counts(hw, n), kernels.ngram_counts(rw, n))
    return stats


def chrf_from_stats(stats: Iterable[Sequence[int]], beta: float) -> float:
    # n-gram types absent from both sides are skipped so short sentences can still score 100
    precisions, recalls = [], []
    for hyp_n, ref_n, match in stats:
        if hyp_n == 0 and ref_n == 0:
            continue
        precisions.append(match / hyp_n if hyp_n else 0.0)
        recalls.append(match / ref_n if ref_n else 0.0)
    if not precisions:
        return 0.0
    p = sum(precisions) / len(precisions)
    r = sum(recalls) / len(recalls)
    b2 = beta * beta
    denom = b2 * p + r
    if denom == 0:
        return 0.0
    return 100.0 * (1 + b2) * p * r / denom


def chrf2pp(hyps: Sequence[str], refs: Sequence[str], cfg: MetricConfig = MetricConfig()) -> float:
    """chrF++: F-beta over averaged character (1..6) and word (1..2) n-gram precision and recall."""
    _check_corpus(hyps, refs)
    return chrf_from_stats(chrf_stats(hyps, refs, cfg.chrf_char_order, cfg.chrf_word_order), cfg.chrf_beta)


def _term_present(hyp: str, term: str, policy: str) -> bool:
    h, t = " ".join(hyp.split()), " ".join(term.split())
    if policy == "case-insensitive":
        h, t = h.lower(), t.lower()
    return bool(t) and t in h


@dataclass(frozen=True)
class SuccessRate:
    micro: float
    macro: float
    found: int
    required: int


def terminology_sr_detail(records: Sequence[TranslationRecord], term_set: TerminologyMode | str,
                          dbs: tuple[TermDictionary | None, TermDictionary | None],
                          cfg: MetricConfig = MetricConfig(), seed: int = 0) -> SuccessRate:
    if not records:
        raise MetricError("no records")
    term_set = TerminologyMode(term_set)
    if term_set == TerminologyMode.NOTERM:
        raise MetricError("term_set must be proper or random")
    proper_db, random_db = dbs
    found = required = 0
    per_segment: list[float] = []
    for rec in records:
        terms = resolve_terms(rec.source, term_set, proper_db, random_db, seed)
        if not terms:
            continue
        hyp = strip_tags(rec.hypothesis).text
        hits = sum(_term_present(hyp, t.target_term, cfg.term_match_policy) for t in terms)
        found += hits
        required += len(terms)
        per_segment.append(hits / len(terms))
    if required == 0:
        return SuccessRate(1.0, 1.0, 0, 0)
    return SuccessRate(found / required, sum(per_segment) / len(per_segment), found, required)


def terminology_sr(records: Sequence[TranslationRecord], term_set: TerminologyMode | str,
                   dbs: tuple[TermDictionary | None, TermDictionary | None],
                   cfg: MetricConfig = MetricConfig(), seed: int = 0) -> float:
    """Micro-averaged share of required target terms found in the hypotheses."""
    return terminology_sr_detail(records, term_set, dbs, cfg, seed).micro


@dataclass(frozen=True)
class EvalReport:
    direction: LanguagePair
    mode: TerminologyMode
    bleu: float
    chrf2pp: float
    sr_proper: float
    sr_random: float
    segment_count: int
    sr_proper_macro: float | None = None
    sr_random_macro: float | None = None

    def to_json(self) -> dict:
        obj = {
            "lang": self.direction.code,
            "mode": self.mode.value,
            "bleu": self.bleu,
            "chrf2pp": self.chrf2pp,
            "sr_proper": self.sr_proper,
            "sr_random": self.sr_random,
            "n": self.segment_count,
        }
        if self.sr_proper_macro is not None:
            obj["sr_proper_macro"] = self.sr_proper_macro
        if self.sr_random_macro is not None:
            obj["sr_random_macro"] = self.sr_random_macro
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "EvalReport":
        return cls(
            LanguagePair.parse(obj["lang"]), TerminologyMode(obj["mode"]), float(obj["bleu"]),
            float(obj["chrf2pp"]), float(obj["sr_proper"]), float(obj["sr_random"]), int(obj["n"]),
            obj.get("sr_proper_macro"), obj.get("sr_random_macro"),
        )


def evaluate(records: Sequence[TranslationRecord], refs: Sequence[str],
             dbs: tuple[TermDictionary | None, TermDictionary | None],
             cfg: MetricConfig = MetricConfig(), seed: int = 0) -> EvalReport:
    """Score one (direction, mode) submission against aligned references."""
    if not records:
        raise MetricError("no records")
    hyps = [strip_tags(r.hypothesis).text for r in records]
    refs = [strip_tags(r).text for r in refs]
    proper = terminology_sr_detail(records, TerminologyMode.PROPER, dbs, cfg, seed)
    rand = terminology_sr_detail(records, TerminologyMode.RANDOM, dbs, cfg, seed)
    return EvalReport(
        records[0].direction, records[0].mode, corpus_bleu(hyps, refs, cfg), chrf2pp(hyps, refs, cfg),
        proper.micro, rand.micro, len(records), proper.macro, rand.macro,
    )


_HEADER = ("Lang", "Type", "BLEU", "chrF2++", "Prop. SR", "Rand. SR")
_WIDTHS = (6, 8, 8, 9, 10, 10)


def _row(cells: Sequence[str]) -> str:
    return "".join(c.ljust(w) if k < 2 else c.rjust(w) for k, (c, w) in enumerate(zip(cells, _WIDTHS))).rstrip()


def render_report(reports: Sequence[EvalReport]) -> str:
    """Plain-text table: one block per target language, rows noterm/proper/random."""
    rule = "-" * sum(_WIDTHS)
    lines = [rule, _row(_HEADER), rule]
    ordered = sorted(reports, key=lambda r: (r.direction.target, MODE_ORDER.index(r.mode)))
    current = None
    for rep in ordered:
        if current is not None and rep.direction != current:
            lines.append(rule)
        label = rep.direction.target.upper() if rep.direction != current else ""
        current = rep.direction
        lines.append(_row((label, rep.mode.value, f"{rep.bleu:.2f}", f"{rep.chrf2pp:.2f}",
                           f"{rep.sr_proper:.2f}", f"{rep.sr_random:.2f}")))
    if ordered:
        lines.append(rule)
    return "\n".join(lines) + "\n"


def reports_to_json(reports: Sequence[EvalReport]) -> str:
    return json.dumps([r.to_json() for r in reports], indent=2, ensure_ascii=False) + "\n"


def reports_from_json(text: str) -> list[EvalReport]:
    return [EvalReport.from_json(obj) for obj in json.loads(text)]

