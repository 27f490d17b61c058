import dataclasses
import json

import numpy as np
import pytest
from scipy.stats import binomtest

from localcorrect.boolfn import Isomorphism
from localcorrect.harness import (
    STAGES,
    ExperimentConfig,
    Report,
    TrialReport,
    clopper_pearson,
    emit_report,
    load_report,
    lower_bound,
    parse_report,
    query_constant,
    render_report,
    run_experiment,
    run_trial,
    run_typicality_suite,
    sigma_digest,
    sub_seed,
)
from localcorrect.oracle import write_flip_file
from localcorrect.typicality import and_core

FAST = ExperimentConfig(family="junta", k=2, n=32, trials=4, profile="scaled:20", seed=5)


@pytest.fixture(scope="module")
def fast_report():
    return run_experiment(FAST)


def test_sub_seed_rule():
    want = int(np.random.SeedSequence(99, spawn_key=(3,)).generate_state(1, np.uint64)[0])
    assert sub_seed(99, 3) == want
    assert len({sub_seed(99, i) for i in range(100)}) == 100


def test_sigma_digest_distinguishes():
    assert sigma_digest(Isomorphism.identity(8)) == sigma_digest(Isomorphism.identity(8))
    assert sigma_digest(Isomorphism.identity(8)) != sigma_digest(Isomorphism([1, 0, 2, 3, 4, 5, 6, 7]))


def test_interval_helpers():
    lo, hi = clopper_pearson(7, 10)
    ref = binomtest(7, 10).proportion_ci(0.95, method="exact")
    assert (lo, hi) == pytest.approx((ref.low, ref.high))
    one_sided = binomtest(95, 100, alternative="greater").proportion_ci(0.95, method="exact").low
    assert lower_bound(95, 100) == pytest.approx(one_sided)
    assert lower_bound(0, 10) == 0.0 and clopper_pearson(10, 10)[1] == 1.0
    assert query_constant(64.0, 4) == 64 / (4 * 4) and query_constant(5, 1) is None


def test_reports_are_deterministic(fast_report):
    again = run_experiment(FAST)
    assert render_report(again) == render_report(fast_report)
    assert render_report(again, "csv") == render_report(fast_report, "csv")
    other = run_experiment(dataclasses.replace(FAST, seed=6))
    assert render_report(other) != render_report(fast_report)


def test_summary_consistency(fast_report):
    s = fast_report.summary
    rows = fast_report.rows
    assert s["trials"] == len(rows) == FAST.trials
    assert s["successes"] == sum(r.success for r in rows)
    assert sum(s["stages"].values()) == len(rows)
    assert s["stages"]["none"] == s["successes"]
    assert s["queries_mean"] == pytest.approx(np.mean([r.query_count for r in rows]))
    assert all(r.wall_time is None for r in rows)


def test_trial_replays_from_sub_seed(fast_report):
    row = fast_report.rows[2]
    assert run_trial(FAST, row.sub_seed, 2) == row


def test_failure_stages_tag_every_failure():
    # tiny partitions and heavy noise force some failures
    cfg = ExperimentConfig(family="junta", k=3, n=24, trials=12, profile="scaled:200", seed=2,
                           epsilon=0.2, gating=False)
    rep = run_experiment(cfg)
    for r in rep.rows:
        assert r.stage in STAGES
        assert (r.stage == "none") == r.success
    assert rep.summary["successes"] < cfg.trials


@pytest.mark.parametrize("fmt", ["jsonl", "csv"])
def test_report_round_trip(fast_report, fmt, tmp_path):
    text = render_report(fast_report, fmt)
    back = parse_report(text, fmt)
    assert back.rows == fast_report.rows
    assert back.summary == json.loads(json.dumps(fast_report.summary))
    path = emit_report(fast_report, tmp_path / f"r.{fmt}", fmt)
    assert load_report(path).rows == fast_report.rows


def test_report_header_and_empty_rows():
    rep = Report("experiment", FAST.to_dict(), {}, [])
    text = render_report(rep)
    assert text.count("\n") == 1
    head = json.loads(text)
    assert head["fields"][0] == "trial" and head["kind"] == "experiment"
    assert parse_report(text).rows == []
    assert render_report(rep, "csv").count("\n") == 2
    with pytest.raises(ValueError):
        parse_report('{"schema": "other"}')
    with pytest.raises(ValueError):
        parse_report("")


def test_timing_is_opt_in():
    rep = run_experiment(dataclasses.replace(FAST, trials=1, timing=True))
    assert rep.rows[0].wall_time > 0
    assert parse_report(render_report(rep, timing=False)).rows[0].wall_time is None
    assert parse_report(render_report(rep, timing=True)).rows[0].wall_time == rep.rows[0].wall_time


def test_identity_sigma_dictator_noiseless():
    cfg = ExperimentConfig(family="junta", k=1, n=16, trials=3, epsilon=0.0, sigma="identity",
                           profile="scaled:20", seed=1)
    rep = run_experiment(cfg)
    assert rep.summary["success_rate"] == 1.0


def test_fully_symmetric_needs_no_queries():
    rep = run_experiment(ExperimentConfig(family="psf", k=0, n=40, trials=100, seed=3))
    assert rep.summary["success_rate"] == 1.0 and rep.summary["queries_max"] == 0
    assert len(rep.rows) == 100 and len(render_report(rep).splitlines()) == 101


def test_adversarial_noise_file(tmp_path):
    path = tmp_path / "flips.hex"
    write_flip_file(path, [np.zeros(16, dtype=np.uint8)])
    cfg = ExperimentConfig(family="psf", k=0, n=16, trials=2, noise="adversarial", noise_file=str(path))
    assert run_experiment(cfg).summary["trials"] == 2


def test_workers_match_serial():
    cfg = dataclasses.replace(FAST, trials=3, workers=2)
    assert run_experiment(cfg).rows == run_experiment(dataclasses.replace(cfg, workers=1)).rows


@pytest.mark.parametrize("bad", [
    dict(family="dnf"), dict(trials=0), dict(k=5, n=4), dict(epsilon=1.0), dict(noise="loud"),
    dict(noise="adversarial"), dict(noise="exact", n=30), dict(sigma="x"), dict(amplify=2),
    dict(workers=0), dict(format="xml"), dict(k=11, n=40, profile="scaled:10"), dict(profile="huge"),
])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        dataclasses.replace(FAST, **bad).validate()


def test_typicality_suite_with_injection():
    cfg = ExperimentConfig(family="junta", k=6, n=6, trials=20, seed=4)
    rep = run_typicality_suite(cfg, [and_core(6)])
    injected = [r for r in rep.rows if r.source == "injected"]
    assert {r.check for r in injected} == {r.check for r in rep.rows}
    influence = next(r for r in injected if r.statistic is not None and r.statistic == 2.0**-6)
    assert not influence.passed
    for check in rep.summary["checks"].values():
        assert 0 <= check["pass_rate"] <= 1
    back = parse_report(render_report(rep, "csv"), "csv")
    assert back.rows == rep.rows


def test_typicality_suite_psf():
    rep = run_typicality_suite(ExperimentConfig(family="psf", k=3, n=12, trials=10, seed=1))
    assert set(rep.summary["checks"]) == {r.check for r in rep.rows}
    with pytest.raises(ValueError):
        run_typicality_suite(ExperimentConfig(family="psf", k=5, n=3))


def test_trial_report_row_types():
    r = TrialReport(0, 1, "ab", "00", 1, 0, False, 3, "set-finder")
    assert TrialReport.from_row({k: str(v) for k, v in r.to_row().items() if v is not None}) == r
