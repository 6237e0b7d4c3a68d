"""Quality-estimation scoring, threshold filtering and source-side dedup."""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

from .backend import BackendError, HttpBackend, MalformedResponseError
from .dictionary import fold
from .synthgen import ParallelPair, with_score
from .tagging import contains_normalized

log = logging.getLogger(__name__)

DEFAULT_THRESHOLD_RANGE = (0.85, 0.9)
BELOW_THRESHOLD = "below-threshold"
DUPLICATE_SOURCE = "duplicate-source"


class FilterError(ValueError):
    pass


class QEScoringError(BackendError):
    """Some pairs could not be scored; ``partial`` holds everything that was."""

    def __init__(self, failures: dict[int, BackendError], partial: list[ParallelPair]):
        super().__init__(f"{len(failures)} pair(s) could not be scored")
        self.failures = failures
        self.partial = partial


@dataclass(frozen=True)
class QEScorerConfig:
    backend: str = "heuristic-stub"
    endpoint: str | None = None
    threshold: float = 0.85
    batch_size: int = 32
    parallelism: int = 4

    def __post_init__(self):
        if self.backend not in ("heuristic-stub", "http-service"):
            raise FilterError(f"unknown QE backend {self.backend!r}")
        if not 0.0 <= self.threshold <= 1.0:
            raise FilterError(f"threshold {self.threshold} outside [0, 1]")
        if self.backend == "http-service" and not self.endpoint:
            raise FilterError("http-service QE backend needs an endpoint")
        if self.batch_size < 1 or self.parallelism < 1:
            raise FilterError("batch_size and parallelism must be >= 1")

    @property
    def non_default(self) -> bool:
        lo, hi = DEFAULT_THRESHOLD_RANGE
        return not lo <= self.threshold <= hi


def heuristic_score(src: str, tgt: str, target_terms: Sequence[str]) -> float:
    """Deterministic stand-in for a neural QE model.

    ``0.5 * term presence + 0.3 * length ratio + 0.2 * non-empty target``,
    computed on tag-free text.
    """
    if target_terms:
        presence = sum(contains_normalized(tgt, t) for t in target_terms) / len(target_terms)
    else:
        presence = 1.0 if tgt.strip() else 0.0
    ls, lt = len(src), len(tgt)
    ratio = min(ls, lt) / max(ls, lt) if max(ls, lt) else 0.0
    score = 0.5 * presence + 0.3 * ratio + 0.2 * (1.0 if tgt.strip() else 0.0)
    return min(1.0, max(0.0, score))


class HttpQEScorer:
    """POST ``{"pairs": [{"src", "mt"}]}`` and read back ``{"scores": [float]}``."""

    def __init__(self, endpoint: str, **client_kwargs):
        self.client = HttpBackend(endpoint, **client_kwargs)

    def score(self, items: Sequence[tuple[str, str]]) -> list[float]:
        data = self.client.with_retries({"pairs": [{"src": s, "mt": t} for s, t in items]})
        scores = data.get("scores") if isinstance(data, dict) else None
        if not isinstance(scores, list) or len(scores) != len(items):
            raise MalformedResponseError("QE response lacks a matching 'scores' list")
        out = []
        for s in scores:
            if isinstance(s, bool) or not isinstance(s, (int, float)) or math.isnan(s):
                raise MalformedResponseError(f"bad QE score {s!r}")
            out.append(min(1.0, max(0.0, float(s))))
        return out


def score_pairs(pairs: Sequence[ParallelPair], cfg: QEScorerConfig,
                scorer: Callable[[Sequence[tuple[str, str]]], list[float]] | None = None) -> list[ParallelPair]:
    """Attach a ``qe_score`` to every pair, scoring tag-stripped text."""
    if cfg.backend == "heuristic-stub" and scorer is None:
        return [
            with_score(p, heuristic_score(p.source.stripped, p.target.stripped,
                                          [t.target_term for t in p.terms_used]))
            for p in pairs
        ]
    if scorer is None:
        scorer = HttpQEScorer(cfg.endpoint).score
    chunks = [list(range(k, min(k + cfg.batch_size, len(pairs)))) for k in range(0, len(pairs), cfg.batch_size)]

    def run(idx: list[int]):
        try:
            return scorer([(pairs[i].source.stripped, pairs[i].target.stripped) for i in idx])
        except BackendError as exc:
            return exc

    with ThreadPoolExecutor(max_workers=cfg.parallelism) as pool:
        outcomes = list(pool.map(run, chunks))
    scored: list[ParallelPair] = list(pairs)
    failures: dict[int, BackendError] = {}
    for idx, out in zip(chunks, outcomes):
        for j, i in enumerate(idx):
            if isinstance(out, BackendError):
                failures[i] = out
            else:
                scored[i] = with_score(pairs[i], out[j])
    if failures:
        raise QEScoringError(failures, scored)
    return scored


def source_key(pair: ParallelPair) -> str:
    return fold(pair.source.stripped)


@dataclass(frozen=True)
class Dropped:
    index: int
    pair: ParallelPair
    reason: str

    def to_json(self) -> dict:
        return {"index": self.index, "reason": self.reason, "src": self.pair.source.stripped,
                "qe_score": self.pair.qe_score}


def filter_and_dedup(pairs: Sequence[ParallelPair], threshold: float) -> tuple[list[ParallelPair], list[Dropped]]:
    """Keep pairs scoring at least ``threshold`` whose normalized source is new.

    Below-threshold pairs do not claim their source, so a later passing
    duplicate can still be kept.
    """
    unscored = [i for i, p in enumerate(pairs) if p.qe_score is None]
    if unscored:
        raise FilterError(f"{len(unscored)} unscored pair(s), first at index {unscored[0]}")
    kept: list[ParallelPair] = []
    dropped: list[Dropped] = []
    seen: set[str] = set()
    for i, pair in enumerate(pairs):
        if pair.qe_score < threshold:
            dropped.append(Dropped(i, pair, BELOW_THRESHOLD))
            continue
        key = source_key(pair)
        if key in seen:
            dropped.append(Dropped(i, pair, DUPLICATE_SOURCE))
            continue
        seen.add(key)
        kept.append(pair)
    if pairs:
        log.info("kept %d/%d pairs (%.1f%%)", len(kept), len(pairs), 100.0 * len(kept) / len(pairs))
    return kept, dropped


def dump_drop_report(dropped: Sequence[Dropped]) -> str:
    return "".join(json.dumps(d.to_json(), ensure_ascii=False) + "\n" for d in dropped)
