"""Text-generation backends.

``HttpBackend`` talks JSON over HTTP POST::

    request:  {"prompt": str, "temperature": float, "n": int}
    response: {"completions": [str, ...]}

``MockBackend`` is a deterministic offline stand-in that understands the
generation and post-editing prompts built by this package.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import random
import re
import threading
import time
import urllib.error
import urllib.request
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .dictionary import TermPair
from .tagging import contains_normalized, find_term_spans

log = logging.getLogger(__name__)

API_KEY_ENV = "TERMFORGE_API_KEY"


class BackendError(RuntimeError):
    retryable = False


class TransportError(BackendError):
    retryable = True


class AuthenticationError(BackendError):
    pass


class RateLimitError(BackendError):
    retryable = True

    def __init__(self, message: str, retry_after: float | None = None):
        super().__init__(message)
        self.retry_after = retry_after


class MalformedResponseError(BackendError):
    pass


@dataclass(frozen=True)
class GenerationRequest:
    prompt: str
    temperature: float = 0.3
    max_outputs: int = 1
    request_id: str = field(default_factory=lambda: uuid.uuid4().hex)

    def __post_init__(self):
        if not 0.0 <= self.temperature <= 1.0:
            raise ValueError(f"temperature {self.temperature} outside [0, 1]")
        if self.max_outputs < 1:
            raise ValueError("max_outputs must be >= 1")


@dataclass(frozen=True)
class GenerationResult:
    request_id: str
    completions: list[str]
    backend_name: str
    latency: float


@dataclass
class BatchOutcome:
    results: list[GenerationResult]
    errors: dict[str, BackendError]

    def by_id(self) -> dict[str, GenerationResult]:
        return {r.request_id: r for r in self.results}


class TokenBucket:
    """Thread-safe token bucket; ``acquire`` blocks until a token is free."""

    def __init__(self, rate: float, capacity: float | None = None,
                 clock: Callable[[], float] = time.monotonic, sleep: Callable[[float], None] = time.sleep):
        if rate <= 0:
            raise ValueError("rate must be positive")
        self.rate = rate
        self.capacity = capacity if capacity is not None else max(1.0, rate)
        self._tokens = self.capacity
        self._clock = clock
        self._sleep = sleep
        self._last = clock()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self._clock()
                self._tokens = min(self.capacity, self._tokens + (now - self._last) * self.rate)
                self._last = now
                if self._tokens >= 1:
                    self._tokens -= 1
                    return
                wait = (1 - self._tokens) / self.rate
            self._sleep(wait)


class TextGenBackend:
    """Base class: subclasses implement ``_complete``."""

    name = "base"

    def __init__(self):
        self._lock = threading.Lock()
        self.in_flight = 0
        self.peak_in_flight = 0
        self.calls = 0

    def _complete(self, req: GenerationRequest) -> list[str]:
        raise NotImplementedError

    def generate(self, req: GenerationRequest) -> GenerationResult:
        with self._lock:
            self.in_flight += 1
            self.calls += 1
            self.peak_in_flight = max(self.peak_in_flight, self.in_flight)
        start = time.perf_counter()
        try:
            completions = self._complete(req)
        finally:
            with self._lock:
                self.in_flight -= 1
        if not completions:
            raise MalformedResponseError(f"request {req.request_id}: no completions")
        return GenerationResult(req.request_id, list(completions), self.name, time.perf_counter() - start)

    def generate_batch(self, reqs: Sequence[GenerationRequest], parallelism: int = 4) -> BatchOutcome:
        """Run requests with at most ``parallelism`` in flight; results keep input order."""
        if parallelism < 1:
            raise ValueError("parallelism must be >= 1")

        def run(req: GenerationRequest):
            try:
                return self.generate(req)
            except BackendError as exc:
                return exc

        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            outcomes = list(pool.map(run, reqs))
        results: list[GenerationResult] = []
        errors: dict[str, BackendError] = {}
        for req, out in zip(reqs, outcomes):
            if isinstance(out, BackendError):
                errors[req.request_id] = out
            else:
                results.append(out)
        if errors:
            log.warning("%d of %d requests failed", len(errors), len(reqs))
        return BatchOutcome(results, errors)


class HttpBackend(TextGenBackend):
    name = "http"

    def __init__(self, url: str, api_key: str | None = None, *, api_key_env: str = API_KEY_ENV,
                 timeout: float = 60.0, max_attempts: int = 3, backoff: float = 0.5, max_backoff: float = 8.0,
                 rate_limiter: TokenBucket | None = None, sleep: Callable[[float], None] = time.sleep):
        super().__init__()
        self.url = url
        self.api_key = api_key if api_key is not None else os.environ.get(api_key_env)
        self.timeout = timeout
        self.max_attempts = max_attempts
        self.backoff = backoff
        self.max_backoff = max_backoff
        self.rate_limiter = rate_limiter
        self._sleep = sleep

    def _post(self, payload: dict) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        request = urllib.request.Request(
            self.url, data=json.dumps(payload).encode("utf-8"), headers=headers, method="POST"
        )
        if self.rate_limiter is not None:
            self.rate_limiter.acquire()
        try:
            with urllib.request.urlopen(request, timeout=self.timeout) as resp:
                body = resp.read()
        except urllib.error.HTTPError as exc:
            if exc.code in (401, 403):
                raise AuthenticationError(f"HTTP {exc.code} from {self.url}") from None
            if exc.code == 429:
                retry_after = exc.headers.get("Retry-After") if exc.headers else None
                try:
                    hint = float(retry_after) if retry_after is not None else None
                except ValueError:
                    hint = None
                raise RateLimitError(f"rate limited by {self.url}", hint) from None
            if exc.code >= 500:
                raise TransportError(f"HTTP {exc.code} from {self.url}") from None
            raise MalformedResponseError(f"HTTP {exc.code} from {self.url}") from None
        except (urllib.error.URLError, TimeoutError, ConnectionError) as exc:
            raise TransportError(f"cannot reach {self.url}: {exc}") from None
        try:
            return json.loads(body)
        except (json.JSONDecodeError, UnicodeDecodeError):
            raise MalformedResponseError("response is not JSON") from None

    def with_retries(self, payload: dict) -> dict:
        """POST with capped exponential backoff on transient failures."""
        for attempt in range(1, self.max_attempts + 1):
            try:
                return self._post(payload)
            except BackendError as exc:
                if not exc.retryable or attempt == self.max_attempts:
                    raise
                delay = min(self.max_backoff, self.backoff * 2 ** (attempt - 1))
                if isinstance(exc, RateLimitError) and exc.retry_after is not None:
                    delay = min(self.max_backoff, max(delay, exc.retry_after))
                log.info("attempt %d failed (%s); retrying in %.2fs", attempt, exc, delay)
                self._sleep(delay)
        raise AssertionError("unreachable")

    def _complete(self, req: GenerationRequest) -> list[str]:
        data = self.with_retries({"prompt": req.prompt, "temperature": req.temperature, "n": req.max_outputs})
        completions = data.get("completions") if isinstance(data, dict) else None
        if not isinstance(completions, list) or not all(isinstance(c, str) for c in completions):
            raise MalformedResponseError("response lacks a 'completions' list of strings")
        return completions


# --- mock ------------------------------------------------------------------

_SINGLE_RE = re.compile(
    r"^Generate (\d+) professional.*?\nThe term pair to use is: (.*)\\\(EN\) : \\\"(.*)\\ \((.*?)\)\n", re.S
)
_MULTI_RE = re.compile(
    r"^Generate (\d+) professional, domain-specific English-\((.*?)\) bilingual.*?"
    r"in each sentence pair:\\n(.*?)\nRequirements:", re.S
)
_PE_RE = re.compile(
    r"CURRENT TRANSLATION \((.*?)\): (.*?)\n\n(?:REQUIRED TERMINOLOGY \(English: .*?\): (.*?)\n\n)?", re.S
)
_TERM_STR_RE = re.compile(r'"((?:[^"\\]|\\.)*)": "((?:[^"\\]|\\.)*)"')

_EN_SINGLE = [
    "The [TERM]{0}[/TERM] is reviewed every quarter by the finance team.",
    "Our platform relies on the [TERM]{0}[/TERM] to process customer requests.",
    "Please check the [TERM]{0}[/TERM] before approving the transaction.",
    "The report explains how the [TERM]{0}[/TERM] affects operating costs.",
    "Engineers updated the [TERM]{0}[/TERM] during the maintenance window.",
]
_TGT_SINGLE = {
    "German": [
        "Die [TERM]{0}[/TERM] wird jedes Quartal vom Finanzteam geprüft.",
        "Unsere Plattform nutzt die [TERM]{0}[/TERM] zur Bearbeitung von Kundenanfragen.",
        "Bitte prüfen Sie die [TERM]{0}[/TERM] vor der Freigabe der Transaktion.",
        "Der Bericht erklärt, wie die [TERM]{0}[/TERM] die Betriebskosten beeinflusst.",
        "Die Techniker haben die [TERM]{0}[/TERM] im Wartungsfenster aktualisiert.",
    ],
    "Spanish": [
        "El equipo financiero revisa la [TERM]{0}[/TERM] cada trimestre.",
        "Nuestra plataforma utiliza la [TERM]{0}[/TERM] para procesar las solicitudes.",
        "Compruebe la [TERM]{0}[/TERM] antes de aprobar la transacción.",
        "El informe explica cómo la [TERM]{0}[/TERM] afecta los costes operativos.",
        "Los ingenieros actualizaron la [TERM]{0}[/TERM] durante el mantenimiento.",
    ],
    "Russian": [
        "Финансовая команда проверяет [TERM]{0}[/TERM] каждый квартал.",
        "Наша платформа использует [TERM]{0}[/TERM] для обработки запросов.",
        "Проверьте [TERM]{0}[/TERM] перед утверждением транзакции.",
        "В отчёте объясняется, как [TERM]{0}[/TERM] влияет на операционные расходы.",
        "Инженеры обновили [TERM]{0}[/TERM] во время обслуживания.",
    ],
}
_CONTEXTS = {
    "English": ["", "Last year", "In the pilot phase", "According to the auditors",
                "After the migration", "For regulatory reasons", "In most regions", "Since the upgrade"],
    "German": ["", "Letztes Jahr", "In der Pilotphase", "Laut den Prüfern",
               "Nach der Migration", "Aus regulatorischen Gründen", "In den meisten Regionen", "Seit dem Upgrade"],
    "Spanish": ["", "El año pasado", "En la fase piloto", "Según los auditores",
                "Tras la migración", "Por motivos regulatorios", "En la mayoría de las regiones", "Desde la actualización"],
    "Russian": ["", "В прошлом году", "На пилотном этапе", "По данным аудиторов",
                "После миграции", "По регуляторным причинам", "В большинстве регионов", "После обновления"],
}
_EN_MULTI = "In this release, {0} was integrated with {1}{2}."
_TGT_MULTI = {
    "German": "In dieser Version wurde {0} mit {1}{2} integriert.",
    "Spanish": "En esta versión, {0} se integró con {1}{2}.",
    "Russian": "В этом выпуске {0} интегрировали с {1}{2}.",
}
_AND = {"English": " and ", "German": " und ", "Spanish": " y ", "Russian": " и "}


def _tag(term: str) -> str:
    return f"[TERM]{term}[/TERM]"


class MockBackend(TextGenBackend):
    """Deterministic backend: output depends only on (prompt, temperature, seed).

    ``fail_ids`` makes matching request ids raise ``TransportError``;
    ``postprocess`` may rewrite completions (used to inject faults).
    """

    name = "mock"

    def __init__(self, seed: int = 0, *, fail_ids: Sequence[str] = (),
                 postprocess: Callable[[GenerationRequest, list[str]], list[str]] | None = None,
                 delay: float = 0.0):
        super().__init__()
        self.seed = seed
        self.fail_ids = set(fail_ids)
        self.postprocess = postprocess
        self.delay = delay

    def _rng(self, req: GenerationRequest, i: int) -> random.Random:
        digest = hashlib.sha256(f"{self.seed}\x00{req.temperature!r}\x00{i}\x00{req.prompt}".encode()).digest()
        return random.Random(int.from_bytes(digest[:8], "big"))

    def _complete(self, req: GenerationRequest) -> list[str]:
        if req.request_id in self.fail_ids:
            raise TransportError(f"injected failure for {req.request_id}")
        if self.delay:
            time.sleep(self.delay)
        out = [self._one(req, i) for i in range(req.max_outputs)]
        if self.postprocess is not None:
            out = self.postprocess(req, out)
        return out

    def _one(self, req: GenerationRequest, i: int) -> str:
        rng = self._rng(req, i)
        prompt = req.prompt
        m = _SINGLE_RE.match(prompt)
        if m:
            n, src, tgt, lang = int(m.group(1)), m.group(2), m.group(3), m.group(4)
            tgt_templates = _TGT_SINGLE.get(lang, _TGT_SINGLE["German"])
            tgt_ctx = _CONTEXTS.get(lang, _CONTEXTS["German"])
            combos = [(k, c) for k in range(len(_EN_SINGLE)) for c in range(len(_CONTEXTS["English"]))]
            picks = rng.sample(combos, min(n, len(combos)))
            picks += [rng.choice(combos) for _ in range(n - len(picks))]
            lines = []
            for k, c in picks:
                lines.append(f"EN: {_with_context(_EN_SINGLE[k].format(src), _CONTEXTS['English'][c])}")
                lines.append(f"{lang}: {_with_context(tgt_templates[k].format(tgt), tgt_ctx[c])}")
            return "\n".join(lines)
        m = _MULTI_RE.match(prompt)
        if m:
            n, lang = int(m.group(1)), m.group(2)
            pairs = [tuple(x.strip() for x in line.split(" : ", 1)) for line in m.group(3).splitlines() if " : " in line]
            lines = []
            for _ in range(n):
                order = list(range(len(pairs)))
                rng.shuffle(order)
                src = [_tag(pairs[j][0]) for j in order]
                tgt = [_tag(pairs[j][1]) for j in order]
                lines.append("EN: " + _multi(_EN_MULTI, src, _AND["English"]))
                lines.append(f"{lang}: " + _multi(_TGT_MULTI.get(lang, _TGT_MULTI["German"]), tgt, _AND.get(lang, " & ")))
            return "\n".join(lines)
        m = _PE_RE.search(prompt)
        if m:
            translation = m.group(2)
            terms = []
            if m.group(3):
                terms = [(_unescape(a), _unescape(b)) for a, b in _TERM_STR_RE.findall(m.group(3))]
            return substitute_terms(translation, terms)
        return f"mock completion {rng.randrange(10**6)}"


def _with_context(sentence: str, context: str) -> str:
    if not context:
        return sentence
    return f"{context}, {sentence[0].lower()}{sentence[1:]}"


def _multi(template: str, items: list[str], conj: str) -> str:
    rest = items[2:]
    tail = "".join(", " + x if k < len(rest) - 1 else conj + x for k, x in enumerate(rest))
    return template.format(items[0], items[1], tail)


def _unescape(s: str) -> str:
    return json.loads(f'"{s}"')


def _exact_spans(text: str, needles: Sequence[str]) -> list[tuple[int, int]]:
    out = []
    for n in needles:
        out.extend((m.start(), m.end()) for m in re.finditer(re.escape(n), text))
    return out


def substitute_terms(translation: str, terms: Sequence[tuple[str, str]]) -> str:
    """Make every target term appear verbatim in ``translation``.

    A case variant of the target term, or an untranslated source term, is
    replaced in place; otherwise the target term is appended. Spans already
    holding some other required target are never rewritten.
    """
    text = translation
    targets = [tgt for _, tgt in terms]
    for src, tgt in terms:
        if contains_normalized(text, tgt, case_sensitive=True):
            continue
        guarded = _exact_spans(text, [t for t in targets if t != tgt])
        free = lambda span: not any(span[0] < b and a < span[1] for a, b in guarded)  # noqa: E731
        hits = [h for h in find_term_spans(text, [TermPair(tgt, tgt)], "source") if free(h)] or [
            h for h in find_term_spans(text, [TermPair(src, tgt)], "source") if free(h)
        ]
        if hits:
            a, b, _ = hits[0]
            text = text[:a] + tgt + text[b:]
            continue
        body = text.rstrip()
        end = ""
        if body and body[-1] in ".!?":
            body, end = body[:-1], body[-1]
        text = f"{body} ({tgt}){end}" if body else tgt
    return text
