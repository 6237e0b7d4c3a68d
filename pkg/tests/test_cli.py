import json

import pytest

import fixtures
import golden
import pipeline
from termforge.cli import atomic_write, main
from termforge.config import ConfigError, load_config, parse_config
from termforge.dictionary import ALL_DIRECTIONS, LanguagePair, read_dictionary
from termforge.metrics import reports_from_json


def test_extract_terms_counts_and_determinism(tmp_path):
    ws = fixtures.write_workspace(tmp_path, 80)
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    assert main(["extract-terms", str(ws["en-de"]["dev"]), "--direction", "en-de", "--out", str(a)]) == 0
    assert main(["extract-terms", str(ws["en-de"]["dev"]), "--direction", "en-de", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    d = read_dictionary(a, LanguagePair("en", "de"))
    used = {t["src"] for row in fixtures.segments(LanguagePair("en", "de"), 80) for t in row["terms"]}
    assert {p.source_term for p in d.entries} == used
    assert all(p in fixtures.proper_db(LanguagePair("en", "de")) for p in d.entries)


def test_missing_input_names_path(tmp_path, capsys):
    missing = tmp_path / "absent.dev.jsonl"
    code = main(["extract-terms", str(missing), "--direction", "en-de", "--out", str(tmp_path / "o")])
    assert code == 2
    assert str(missing) in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_bad_direction_rejected(tmp_path):
    ws = fixtures.write_workspace(tmp_path, 5)
    assert main(["extract-terms", str(ws["en-de"]["dev"]), "--direction", "en-fr", "--out", str(tmp_path / "o")]) == 2


def test_threshold_out_of_range_in_config(tmp_path, capsys):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text("filter:\n  threshold: 1.01\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(cfg)
    assert main(["validate", str(tmp_path), "--config", str(cfg)]) == 2
    assert "filter" in capsys.readouterr().err


@pytest.mark.parametrize("data, key", [
    ({"gen": {"temperature_range": [0.2, 1.5]}}, "gen.temperature_range"),
    ({"gen": {"parallelism": 0}}, "gen.parallelism"),
    ({"postedit": {"temperature": "low"}}, "postedit.temperature"),
    ({"metrics": {"colour": 1}}, "metrics.colour"),
    ({"directions": ["en-xx"]}, "directions"),
    ({"backends": {"mock": False}}, "backends.generation_endpoint"),
])
def test_config_errors_carry_key_path(data, key):
    with pytest.raises(ConfigError, match=rf"^{key}"):
        parse_config(data)


def test_config_defaults_and_overrides(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("seed: 5\ngen:\n  temperature_range: [0.3, 0.7]\nfilter:\n  threshold: 0.9\n", encoding="utf-8")
    c = load_config(cfg)
    assert (c.seed, c.gen.temperature_range, c.filter.threshold, c.postedit.temperature) == (5, (0.3, 0.7), 0.9, 0.3)
    assert load_config(None).directions == ALL_DIRECTIONS


def test_atomic_write_leaves_no_temp_files(tmp_path):
    atomic_write(tmp_path / "x" / "out.txt", "a\n")
    atomic_write(tmp_path / "x" / "out.txt", "b\n")
    assert [p.name for p in (tmp_path / "x").iterdir()] == ["out.txt"]
    assert (tmp_path / "x" / "out.txt").read_text() == "b\n"


def test_hermetic_run_outputs(hermetic_run):
    sub = hermetic_run["submission"]
    assert sorted(p.name for p in sub.glob("*.jsonl")) == sorted(
        f"{d.code}.{m}.jsonl" for d in ALL_DIRECTIONS for m in pipeline.MODES)
    reps = reports_from_json(hermetic_run["report_json"].read_text(encoding="utf-8"))
    assert len(reps) == 9 and all(r.segment_count == 600 for r in reps)
    text = hermetic_run["report_text"].read_text(encoding="utf-8")
    assert text.splitlines()[:3] == golden.HEADER_ONLY.splitlines()
    assert main(["validate", str(sub), "--dict-dir", str(hermetic_run["dicts"])]) == 0


def test_hermetic_intermediate_corpora(hermetic_run):
    for d in ALL_DIRECTIONS:
        raw = hermetic_run["corpus"] / f"{d.code}.raw.jsonl"
        kept = hermetic_run["corpus"] / f"{d.code}.filtered.jsonl"
        drops = hermetic_run["corpus"] / f"{d.code}.drops.jsonl"
        n_raw = len(raw.read_text(encoding="utf-8").splitlines())
        n_kept = len(kept.read_text(encoding="utf-8").splitlines())
        n_drop = len(drops.read_text(encoding="utf-8").splitlines())
        assert n_raw > 0 and n_kept + n_drop == n_raw


def test_inputs_not_mutated(tmp_path):
    out = pipeline.run_pipeline(tmp_path, count=40, gen_count=2)
    data = tmp_path / "data"
    before = pipeline.tree_digest(data)
    pipeline.run(["postedit", "--drafts", str(out["workspace"]["en-de"]["drafts"]), "--direction", "en-de",
                  "--mode", "proper", "--proper-db", str(out["dicts"] / "en-de.proper.dict.jsonl"),
                  "--out-dir", str(tmp_path / "again"), "--mock-backends"])
    assert pipeline.tree_digest(data) == before


def test_rerun_is_byte_identical(tmp_path):
    a = pipeline.run_pipeline(tmp_path / "a", seed=3, count=60, gen_count=3)
    b = pipeline.run_pipeline(tmp_path / "b", seed=3, count=60, gen_count=3)
    assert pipeline.tree_digest(a["submission"]) == pipeline.tree_digest(b["submission"])
    assert pipeline.tree_digest(a["corpus"]) == pipeline.tree_digest(b["corpus"])
    assert a["report_json"].read_bytes() == b["report_json"].read_bytes()


def test_seed_changes_generation(tmp_path):
    a = pipeline.run_pipeline(tmp_path / "a", seed=3, count=60, gen_count=2)
    b = pipeline.run_pipeline(tmp_path / "b", seed=4, count=60, gen_count=2)
    name = "en-de.raw.jsonl"
    assert (a["corpus"] / name).read_bytes() != (b["corpus"] / name).read_bytes()


def test_validate_writes_json_and_exit_code(hermetic_run, tmp_path, capsys):
    out = tmp_path / "v.json"
    assert main(["validate", str(hermetic_run["submission"]), "--json", str(out)]) == 0
    assert json.loads(out.read_text())["ok"] is True
    assert capsys.readouterr().out.endswith("PASS\n")
    assert main(["validate", str(tmp_path)]) == 1


def test_evaluate_missing_submission_dir(tmp_path):
    assert main(["evaluate", str(tmp_path / "none"), "--refs", str(tmp_path), "--out-json", str(tmp_path / "r")]) == 2


def test_filter_threshold_flag_override(hermetic_run, tmp_path):
    src = hermetic_run["corpus"] / "en-de.retagged.jsonl"
    out = tmp_path / "f.jsonl"
    assert main(["filter", str(src), "--out", str(out), "--threshold", "0.0"]) == 0
    n_in = len(src.read_text(encoding="utf-8").splitlines())
    assert 0 < len(out.read_text(encoding="utf-8").splitlines()) <= n_in
    assert main(["filter", str(src), "--out", str(out), "--threshold", "1.5"]) == 2
