import json

import pytest

from kbreason.datasets import NoiseConfig, build_countries_tasks, countries_mini_kb
from kbreason.evaluation import (
    CSV_COLUMNS,
    RunConfig,
    SweepCell,
    countries_rule_library,
    evaluate,
    evaluate_countries,
    make_backends,
    sweep,
    sweep_to_csv,
)
from kbreason.prover import PromptSpec


def _cfg(**kw):
    defaults = dict(buckets=(5,), planner="template", translator="hash")
    defaults.update(kw)
    return RunConfig(**defaults)


def test_run_config_validation():
    with pytest.raises(ValueError):
        RunConfig(planner="gpt5")
    with pytest.raises(ValueError):
        RunConfig(translator="laser")
    with pytest.raises(ValueError):
        RunConfig(k_values=())
    with pytest.raises(ValueError):
        RunConfig(workers=0)


def test_run_config_from_file(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({
        "buckets": [5, 6],
        "k_values": [1, 3],
        "prompt": {"strategy": "random", "temperature": 0.3},
        "noise": {"rate": 0.5, "base": 100, "seed": 2},
        "planner": "template",
        "translator": "hash",
    }))
    cfg = RunConfig.from_file(path, workers=2)
    assert cfg.buckets == (5, 6)
    assert cfg.prompt.strategy == "random"
    assert cfg.noise == NoiseConfig(rate=0.5, base=100, seed=2)
    assert cfg.workers == 2


def test_make_backends_replay_needs_fixture():
    with pytest.raises(ValueError):
        make_backends(_cfg(planner="replay"))


def test_report_structure_and_recount(small_corpus, small_library):
    cfg = _cfg(k_values=(1, 3))
    report = evaluate(cfg, corpus=small_corpus, lib=small_library)
    assert [r.k for r in report.rows] == [1, 3]
    assert all(r.attempts == small_corpus.per_length for r in report.rows)
    assert report.recount()
    csv_text = report.to_csv()
    header, *lines = csv_text.strip().splitlines()
    assert header == ",".join(CSV_COLUMNS)
    assert len(lines) == 2
    payload = json.loads(report.to_json())
    assert set(payload) == {"config", "rows", "verdicts"}
    assert len(payload["verdicts"]) == small_corpus.per_length


def test_verified_never_exceeds_reach(small_corpus, small_library):
    cfg = _cfg(buckets=(5, 6), k_values=(1, 3, 5))
    report = evaluate(cfg, corpus=small_corpus, lib=small_library)
    for row in report.rows:
        assert row.verified_rate <= row.reach_rate + 1e-12


def test_success_monotone_in_k(small_corpus, small_library):
    cfg = _cfg(k_values=(1, 3, 5, 10))
    report = evaluate(cfg, corpus=small_corpus, lib=small_library)
    by_bucket = {}
    for row in report.rows:
        by_bucket.setdefault(row.bucket, []).append((row.k, row.reach_rate, row.verified_rate))
    for rows in by_bucket.values():
        rows.sort()
        reaches = [r for _, r, _ in rows]
        verifieds = [v for _, _, v in rows]
        assert reaches == sorted(reaches)
        assert verifieds == sorted(verifieds)


def test_evaluate_deterministic_bytes(small_corpus, small_library):
    cfg = _cfg(k_values=(1, 3))
    a = evaluate(cfg, corpus=small_corpus, lib=small_library)
    b = evaluate(cfg, corpus=small_corpus, lib=small_library)
    assert a.to_csv() == b.to_csv()
    assert a.to_json() == b.to_json()


def test_workers_do_not_change_output(small_corpus, small_library):
    serial = evaluate(_cfg(), corpus=small_corpus, lib=small_library)
    parallel = evaluate(_cfg(workers=4), corpus=small_corpus, lib=small_library)
    assert serial.to_csv() == parallel.to_csv()
    # JSON differs only in the echoed workers count
    assert serial.rows == parallel.rows
    assert serial.verdicts == parallel.verdicts


def test_empty_bucket_no_division_error(small_corpus, small_library):
    report = evaluate(_cfg(buckets=(9,)), corpus=small_corpus, lib=small_library)
    assert report.rows[0].attempts == 0
    assert report.rows[0].reach_rate == 0.0
    assert report.recount()


def test_noise_config_echoed(small_corpus, small_library):
    cfg = _cfg(noise=NoiseConfig(rate=0.5, base=100, seed=1))
    report = evaluate(cfg, corpus=small_corpus, lib=small_library)
    assert report.rows[0].noise_rate == 0.5


def test_measure_time_off_means_zero(small_corpus, small_library):
    off = evaluate(_cfg(), corpus=small_corpus, lib=small_library)
    assert all(r.mean_ms_per_step == 0.0 for r in off.rows)
    on = evaluate(_cfg(measure_time=True), corpus=small_corpus, lib=small_library)
    assert any(r.mean_ms_per_step > 0.0 for r in on.rows)


def test_save_refuses_overwrite(tmp_path, small_corpus, small_library):
    report = evaluate(_cfg(), corpus=small_corpus, lib=small_library)
    report.save(tmp_path, prefix="r")
    with pytest.raises(FileExistsError):
        report.save(tmp_path, prefix="r")
    report.save(tmp_path, prefix="r", force=True)


def test_sweep_isolated_failures(small_corpus):
    good = _cfg()
    bad = _cfg(planner="replay", fixture="/nonexistent/fixture.json")
    cells = sweep([good, bad], corpus=small_corpus)
    assert isinstance(cells[0], SweepCell)
    assert cells[0].report is not None and cells[0].error is None
    assert cells[1].report is None and cells[1].error
    csv_text = sweep_to_csv(cells)
    assert csv_text.startswith(",".join(CSV_COLUMNS))
    with pytest.raises(ValueError):
        sweep([], corpus=small_corpus)


def test_sweep_n_examples_rows(small_corpus):
    grid = [_cfg(prompt=PromptSpec(n_examples=n)) for n in (1, 2, 3)]
    cells = sweep(grid, corpus=small_corpus)
    ns = [cell.report.rows[0].n for cell in cells]
    assert ns == [1, 2, 3]


def test_countries_rule_library_and_eval():
    raw = countries_mini_kb()
    task = build_countries_tasks(raw, "S1", seed=0)
    lib = countries_rule_library(task)
    assert len(lib) >= 1
    test_subjects = {q.subject for q in task.test_queries}
    for ex in lib.examples:
        assert ex.task.relation == "locatedIn"
        assert ex.task.subject not in test_subjects
        assert len(ex.steps) >= 2
    cfg = RunConfig(k_values=(1, 5), planner="template", translator="hash",
                    prompt=PromptSpec(temperature=0.0))
    report = evaluate_countries(task, cfg, lib=lib)
    assert report.rows[0].bucket == "S1"
    assert report.rows[0].attempts == len(task.test_queries)
    assert report.recount()
