"""``termforge`` command line.

Subcommands: extract-terms, gen-synthetic, retag, filter, postedit,
evaluate, validate. Every output file is written atomically.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from dataclasses import replace
from pathlib import Path

from .backend import HttpBackend, MockBackend, TextGenBackend
from .config import ConfigError, PipelineConfig, load_config
from .dictionary import (
    DictionaryError, LanguagePair, TermDictionary, dump_dictionary, load_dictionary, merge_expansions,
    read_dictionary,
)
from .filtering import FilterError, QEScoringError, dump_drop_report, filter_and_dedup, score_pairs
from .metrics import EvalReport, evaluate, render_report, reports_to_json
from .postedit import (
    TerminologyMode, TranslationRecord, dump_submission, make_records, postedit_batch, submission_filename,
)
from .synthgen import MULTI, SINGLE, GenerationError, ParallelPair, dump_corpus, generate_corpus, load_corpus
from .tagging import retag_pair_detail
from .validation import DEFAULT_PATTERN, ValidationError, validate_submission

log = logging.getLogger("termforge")


class CliError(Exception):
    pass


def atomic_write(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_jsonl(path: str | Path) -> list[dict]:
    rows = []
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from None
    with fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise CliError(f"{path}:{lineno}: invalid JSON: {exc.msg}") from None
    return rows


def _require_file(path: str | Path) -> Path:
    p = Path(path)
    if not p.is_file():
        raise CliError(f"no such file: {p}")
    return p


def dict_path(dict_dir: str | Path, direction: LanguagePair, kind: str) -> Path:
    return Path(dict_dir) / f"{direction.code}.{kind}.dict.jsonl"


def _load_dbs(dict_dir: str | Path | None, direction: LanguagePair) -> tuple[TermDictionary | None, TermDictionary | None]:
    if dict_dir is None:
        return None, None
    out = []
    for kind in ("proper", "random"):
        p = dict_path(dict_dir, direction, kind)
        out.append(read_dictionary(p, direction) if p.is_file() else None)
    return out[0], out[1]


def _generation_backend(cfg: PipelineConfig) -> TextGenBackend:
    if cfg.backends.mock:
        return MockBackend(seed=cfg.seed)
    return HttpBackend(cfg.backends.generation_endpoint, api_key_env=cfg.backends.api_key_env)


# --- commands -------------------------------------------------------------

def cmd_extract_terms(args, cfg: PipelineConfig) -> int:
    direction = LanguagePair.parse(args.direction)
    d = load_dictionary(_require_file(args.devfile), direction)
    if args.expansions:
        rows = _read_jsonl(args.expansions)
        d = merge_expansions(d, [(r.get("src", ""), r.get("tgt", "")) for r in rows])
    atomic_write(args.out, dump_dictionary(d))
    log.info("%s: %d term pairs written to %s", direction.code, len(d), args.out)
    return 0


def cmd_gen_synthetic(args, cfg: PipelineConfig) -> int:
    direction = LanguagePair.parse(args.direction)
    d = read_dictionary(_require_file(args.dict), direction)
    report = generate_corpus(
        d, _generation_backend(cfg), args.count or cfg.gen.count, cfg.seed,
        pairs_per_prompt=cfg.gen.pairs_per_prompt, single_ratio=cfg.gen.mode_ratio,
        temperature_range=cfg.gen.temperature_range, parallelism=cfg.gen.parallelism,
    )
    atomic_write(args.out, dump_corpus(report.pairs))
    log.info("generated %d pairs (%d rejected blocks, %d failed requests)",
             len(report.pairs), report.rejected, report.failed_requests)
    return 0


def cmd_retag(args, cfg: PipelineConfig) -> int:
    pairs = load_corpus(_require_file(args.corpus).read_text(encoding="utf-8"))
    d = read_dictionary(_require_file(args.dict), pairs[0].direction if pairs else LanguagePair())
    out: list[ParallelPair] = []
    dropped = []
    n_warn = 0
    for i, pair in enumerate(pairs):
        res = retag_pair_detail(pair.source.text, pair.target.text, d)
        n_warn += len(res.warnings)
        count = len(res.tagged_terms)
        if count == 1:
            mode = SINGLE
        elif 2 <= count <= 3:
            mode = MULTI
        else:
            dropped.append({"index": i, "reason": f"{count}-tags", "src": res.source.stripped})
            continue
        out.append(replace(pair, source=res.source, target=res.target,
                           terms_used=tuple(res.tagged_terms), gen_mode=mode))
    atomic_write(args.out, dump_corpus(out))
    if args.report:
        atomic_write(args.report, "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in dropped))
    log.info("retagged %d pairs, dropped %d, %d warnings", len(out), len(dropped), n_warn)
    return 0


def cmd_filter(args, cfg: PipelineConfig) -> int:
    pairs = load_corpus(_require_file(args.corpus).read_text(encoding="utf-8"))
    qe = cfg.filter if args.threshold is None else replace(cfg.filter, threshold=args.threshold)
    if qe.non_default:
        log.warning("QE threshold %.3f is outside the usual 0.85-0.90 range", qe.threshold)
    try:
        scored = score_pairs(pairs, qe)
    except QEScoringError as exc:
        detail = {str(i): str(e) for i, e in sorted(exc.failures.items())}
        atomic_write(f"{args.out}.errors.json", json.dumps(detail, indent=2) + "\n")
        raise CliError(f"{exc}; details in {args.out}.errors.json") from None
    kept, dropped = filter_and_dedup(scored, qe.threshold)
    atomic_write(args.out, dump_corpus(kept))
    if args.drop_report:
        atomic_write(args.drop_report, dump_drop_report(dropped))
    log.info("kept %d of %d pairs, dropped %d", len(kept), len(pairs), len(dropped))
    return 0


def cmd_postedit(args, cfg: PipelineConfig) -> int:
    direction = LanguagePair.parse(args.direction)
    mode = TerminologyMode(args.mode)
    proper_db = read_dictionary(_require_file(args.proper_db), direction) if args.proper_db else None
    random_db = read_dictionary(_require_file(args.random_db), direction) if args.random_db else None
    rows = _read_jsonl(_require_file(args.drafts))
    for lineno, row in enumerate(rows, 1):
        if not isinstance(row.get("id"), int) or not isinstance(row.get("source"), str) or not isinstance(row.get("draft"), str):
            raise CliError(f"{args.drafts}: record {lineno} needs int 'id' and string 'source'/'draft'")
    recs = make_records(rows, direction, mode, proper_db, random_db, cfg.seed)
    result = postedit_batch(recs, _generation_backend(cfg), temperature=cfg.postedit.temperature,
                            parallelism=cfg.postedit.parallelism, retries=cfg.postedit.retries)
    done = {r.segment_id: r for r in result.accepted}
    final: list[TranslationRecord] = []
    for rec in recs:
        final.append(done.get(rec.segment_id) or replace(rec, hypothesis=rec.draft))
    out = Path(args.out_dir) / submission_filename(direction, mode)
    atomic_write(out, dump_submission(final))
    if result.rejected:
        rej = [{"id": r.record.segment_id, "reasons": list(r.reasons)} for r in result.rejected]
        atomic_write(Path(args.out_dir) / f".{out.name}.rejected.json", json.dumps(rej, indent=2, ensure_ascii=False) + "\n")
        log.warning("%d records rejected; drafts kept for them", len(rej))
    log.info("%s %s: %d accepted, %d rejected -> %s", direction.code, mode.value,
             len(result.accepted), len(result.rejected), out)
    return 0


def cmd_evaluate(args, cfg: PipelineConfig) -> int:
    sub = Path(args.submission)
    if not sub.is_dir():
        raise CliError(f"no such directory: {sub}")
    reports: list[EvalReport] = []
    for direction in cfg.directions:
        refs_rows = _read_jsonl(_require_file(Path(args.refs) / f"{direction.code}.ref.jsonl"))
        try:
            refs = {r["id"]: r["reference"] for r in refs_rows}
        except (KeyError, TypeError):
            raise CliError(f"reference file for {direction.code} needs 'id' and 'reference' fields") from None
        dbs = _load_dbs(args.dict_dir, direction)
        for mode in TerminologyMode:
            path = sub / submission_filename(direction, mode)
            if not path.is_file():
                log.warning("missing %s", path)
                continue
            try:
                records = [TranslationRecord.from_submission(o) for o in _read_jsonl(path)]
            except (KeyError, TypeError, ValueError) as exc:
                raise CliError(f"{path}: malformed submission record ({exc!r}); run validate first") from None
            missing = [r.segment_id for r in records if r.segment_id not in refs]
            if missing:
                raise CliError(f"{path}: no reference for ids {missing[:5]}")
            reports.append(evaluate(records, [refs[r.segment_id] for r in records], dbs, cfg.metrics, cfg.seed))
    atomic_write(args.out_json, reports_to_json(reports))
    table = render_report(reports)
    if args.out_text:
        atomic_write(args.out_text, table)
    sys.stdout.write(table)
    return 0


def cmd_validate(args, cfg: PipelineConfig) -> int:
    dbs = None
    if args.dict_dir:
        dbs = {d.code: _load_dbs(args.dict_dir, d) for d in cfg.directions}
    report = validate_submission(args.root, dbs, pattern=args.pattern, directions=cfg.directions)
    if args.json:
        atomic_write(args.json, json.dumps(report.to_json(), indent=2, ensure_ascii=False) + "\n")
    sys.stdout.write(report.to_text())
    return report.exit_code


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    # SUPPRESS keeps subcommand parsers from clobbering flags given before the subcommand
    common.add_argument("--config", default=argparse.SUPPRESS, help="YAML pipeline config")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="override config seed")
    common.add_argument("--mock-backends", action="store_true", default=argparse.SUPPRESS,
                        help="use the offline mock generator and stub QE scorer")
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="termforge", description=__doc__.splitlines()[0], parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract-terms", parents=[common], help="build a term dictionary from a dev file")
    p.add_argument("devfile")
    p.add_argument("--direction", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--expansions", help="JSONL of generated {src, tgt} pairs to merge")
    p.set_defaults(func=cmd_extract_terms)

    p = sub.add_parser("gen-synthetic", parents=[common], help="generate tagged synthetic pairs")
    p.add_argument("--dict", required=True)
    p.add_argument("--direction", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, help="number of generation prompts")
    p.set_defaults(func=cmd_gen_synthetic)

    p = sub.add_parser("retag", parents=[common], help="re-derive tags from a dictionary")
    p.add_argument("corpus")
    p.add_argument("--dict", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report", help="JSONL of pairs dropped by retagging")
    p.set_defaults(func=cmd_retag)

    p = sub.add_parser("filter", parents=[common], help="QE-score, threshold and dedup a corpus")
    p.add_argument("corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--drop-report")
    p.add_argument("--threshold", type=float)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("postedit", parents=[common], help="post-edit draft translations")
    p.add_argument("--drafts", required=True)
    p.add_argument("--direction", required=True)
    p.add_argument("--mode", required=True, choices=[m.value for m in TerminologyMode])
    p.add_argument("--proper-db")
    p.add_argument("--random-db")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_postedit)

    p = sub.add_parser("evaluate", parents=[common], help="score a submission directory")
    p.add_argument("submission")
    p.add_argument("--refs", required=True, help="directory of {src}-{tgt}.ref.jsonl files")
    p.add_argument("--dict-dir", help="directory of {src}-{tgt}.{proper,random}.dict.jsonl files")
    p.add_argument("--out-json", required=True)
    p.add_argument("--out-text")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("validate", parents=[common], help="check a submission directory")
    p.add_argument("root")
    p.add_argument("--dict-dir")
    p.add_argument("--pattern", default=DEFAULT_PATTERN)
    p.add_argument("--json", help="write the report as JSON here")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if getattr(args, "verbose", False) else logging.INFO,
                        stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s", force=True)
    try:
        cfg = load_config(getattr(args, "config", None))
        if getattr(args, "seed", None) is not None:
            cfg = replace(cfg, seed=args.seed)
        if getattr(args, "mock_backends", False):
            cfg = replace(cfg, backends=replace(cfg.backends, mock=True),
                          filter=replace(cfg.filter, backend="heuristic-stub"))
        return args.func(args, cfg)
    except (CliError, ConfigError, DictionaryError, FilterError, GenerationError, ValidationError,
            QEScoringError) as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
