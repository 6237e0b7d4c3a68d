"""Submission QA over a directory of ``{src}-{tgt}.{mode}.jsonl`` files."""

from __future__ import annotations

import json
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .dictionary import ALL_DIRECTIONS, DictionaryError, LanguagePair, TermDictionary, TermPair
from .postedit import TerminologyMode, missing_terms
from .tagging import verify_tags

DEFAULT_PATTERN = "{src}-{tgt}.{mode}.jsonl"


class ValidationError(RuntimeError):
    pass


@dataclass
class ValidationReport:
    files_checked: int = 0
    schema_errors: list[tuple[str, int, str]] = field(default_factory=list)
    missing_modes: list[tuple[str, str]] = field(default_factory=list)
    tag_failures: list[tuple[str, int]] = field(default_factory=list)
    constraint_failures: list[tuple[str, int, list[str]]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (self.schema_errors or self.missing_modes or self.tag_failures or self.constraint_failures)

    @property
    def exit_code(self) -> int:
        return 0 if self.ok else 1

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "files_checked": self.files_checked,
            "schema_errors": [{"file": f, "line": n, "reason": r} for f, n, r in self.schema_errors],
            "missing_modes": [{"direction": d, "mode": m} for d, m in self.missing_modes],
            "tag_failures": [{"file": f, "line": n} for f, n in self.tag_failures],
            "constraint_failures": [
                {"file": f, "line": n, "missing_terms": t} for f, n, t in self.constraint_failures
            ],
        }

    def to_text(self) -> str:
        lines = [f"files checked: {self.files_checked}"]
        for f, n, r in self.schema_errors:
            lines.append(f"schema  {f}:{n}: {r}")
        for d, m in self.missing_modes:
            lines.append(f"missing {d} {m}")
        for f, n in self.tag_failures:
            lines.append(f"tags    {f}:{n}")
        for f, n, t in self.constraint_failures:
            lines.append(f"terms   {f}:{n}: missing {', '.join(t)}")
        lines.append("PASS" if self.ok else "FAIL")
        return "\n".join(lines) + "\n"


def _pattern_regex(pattern: str) -> re.Pattern:
    parts = re.split(r"(\{src\}|\{tgt\}|\{mode\})", pattern)
    groups = {"{src}": r"(?P<src>[a-z]{2})", "{tgt}": r"(?P<tgt>[a-z]{2})", "{mode}": r"(?P<mode>[a-z]+)"}
    return re.compile("".join(groups.get(p, re.escape(p)) for p in parts) + r"\Z")


@dataclass
class _FileResult:
    schema_errors: list = field(default_factory=list)
    tag_failures: list = field(default_factory=list)
    constraint_failures: list = field(default_factory=list)


def _check_terms(obj: dict, name: str, lineno: int, out: _FileResult) -> list[TermPair] | None:
    terms = obj.get("terms")
    if not isinstance(terms, list):
        out.schema_errors.append((name, lineno, "field 'terms' must be a list"))
        return None
    pairs = []
    for t in terms:
        if not isinstance(t, dict) or not isinstance(t.get("src"), str) or not isinstance(t.get("tgt"), str):
            out.schema_errors.append((name, lineno, "term entries need string 'src' and 'tgt'"))
            return None
        try:
            pairs.append(TermPair(t["src"], t["tgt"]))
        except DictionaryError as exc:
            out.schema_errors.append((name, lineno, f"bad term: {exc}"))
            return None
    return pairs


def _validate_file(path: Path, direction: LanguagePair, mode: TerminologyMode,
                   db: TermDictionary | None) -> _FileResult:
    out = _FileResult()
    name = path.name
    try:
        raw = path.read_bytes()
    except OSError as exc:
        out.schema_errors.append((name, 0, f"unreadable: {exc}"))
        return out
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError:
        out.schema_errors.append((name, 0, "not UTF-8"))
        return out
    seen_ids: set[int] = set()
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            out.schema_errors.append((name, lineno, f"invalid JSON: {exc.msg}"))
            continue
        if not isinstance(obj, dict):
            out.schema_errors.append((name, lineno, "line is not a JSON object"))
            continue
        bad = False
        for key, kind in (("id", int), ("lang", str), ("mode", str), ("source", str), ("hypothesis", str)):
            value = obj.get(key)
            if not isinstance(value, kind) or isinstance(value, bool):
                out.schema_errors.append((name, lineno, f"field {key!r} missing or not {kind.__name__}"))
                bad = True
        if bad:
            continue
        if obj["lang"] != direction.code or obj["mode"] != mode.value:
            out.schema_errors.append((name, lineno, "lang/mode disagree with filename"))
            continue
        if obj["id"] in seen_ids:
            out.schema_errors.append((name, lineno, f"duplicate id {obj['id']}"))
        seen_ids.add(obj["id"])
        if not obj["hypothesis"].strip():
            out.schema_errors.append((name, lineno, "empty hypothesis"))
            continue
        terms = _check_terms(obj, name, lineno, out)
        if terms is None:
            continue
        if mode == TerminologyMode.NOTERM and terms:
            out.schema_errors.append((name, lineno, "noterm record lists terms"))
            continue
        if not verify_tags(obj["hypothesis"]).ok:
            out.tag_failures.append((name, lineno))
        if mode == TerminologyMode.NOTERM:
            continue
        if db is not None:
            unknown = [t.source_term for t in terms if t not in db]
            if unknown:
                out.schema_errors.append((name, lineno, f"terms not in {mode.value} dictionary: {', '.join(unknown)}"))
        missing = missing_terms(obj["hypothesis"], terms)
        if missing:
            out.constraint_failures.append((name, lineno, missing))
    return out


def validate_submission(root: str | Path,
                        dbs: Mapping[str, tuple[TermDictionary | None, TermDictionary | None]] | None = None,
                        *, pattern: str = DEFAULT_PATTERN,
                        directions: Sequence[LanguagePair] = ALL_DIRECTIONS,
                        parallelism: int = 4) -> ValidationReport:
    """Check a submission directory without modifying it.

    ``dbs`` maps a direction code (``"en-de"``) to ``(proper_db, random_db)``;
    when given, every declared term must come from the matching dictionary.
    """
    root = Path(root)
    if not root.is_dir():
        raise ValidationError(f"not a readable directory: {root}")
    regex = _pattern_regex(pattern)
    report = ValidationReport()
    jobs = []
    present: set[tuple[str, str]] = set()
    for path in sorted(root.glob("*.jsonl")):
        m = regex.match(path.name)
        mode = None
        direction = None
        if m:
            try:
                direction = LanguagePair(m.group("src"), m.group("tgt"))
                mode = TerminologyMode(m.group("mode"))
            except (DictionaryError, ValueError):
                direction = None
        if direction is None or mode is None:
            report.schema_errors.append((path.name, 0, f"filename does not match {pattern}"))
            continue
        present.add((direction.code, mode.value))
        db = None
        if dbs is not None and direction.code in dbs:
            proper_db, random_db = dbs[direction.code]
            db = proper_db if mode == TerminologyMode.PROPER else random_db if mode == TerminologyMode.RANDOM else None
        jobs.append((path, direction, mode, db))

    with ThreadPoolExecutor(max_workers=max(1, parallelism)) as pool:
        results = list(pool.map(lambda job: _validate_file(*job), jobs))
    report.files_checked = len(jobs)
    for res in results:
        report.schema_errors.extend(res.schema_errors)
        report.tag_failures.extend(res.tag_failures)
        report.constraint_failures.extend(res.constraint_failures)
    for direction in directions:
        for mode in TerminologyMode:
            if (direction.code, mode.value) not in present:
                report.missing_modes.append((direction.code, mode.value))
    report.schema_errors.sort(key=lambda e: (e[0], e[1]))
    report.tag_failures.sort()
    report.constraint_failures.sort(key=lambda e: (e[0], e[1]))
    return report
