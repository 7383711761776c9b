import csv

import numpy as np
import pytest

from ddmrc.cli import main
from ddmrc.experiment import level_stats, parse_levels, run_sweep, run_trial


@pytest.mark.parametrize("spec, expected", [
    ("0:1:0.5", [0.0, 0.5, 1.0]),
    ("0:2:0.1", [round(0.1 * k, 10) for k in range(21)]),
    ("0.3", [0.3]),
    ("0, 0.1,1", [0.0, 0.1, 1.0]),
])
def test_parse_levels(spec, expected):
    assert parse_levels(spec) == expected


@pytest.mark.parametrize("spec", ["1:0:0.1", "0:1:0", "0:1"])
def test_parse_levels_rejects(spec):
    with pytest.raises(ValueError):
        parse_levels(spec)


def test_level_stats():
    recs = [{"level": 1.0, "verdict": "Informative", "trace_DA": 1.0, "trace_DB": 2.0},
            {"level": 1.0, "verdict": "Informative", "trace_DA": 3.0, "trace_DB": 2.0},
            {"level": 1.0, "verdict": "Unknown", "trace_DA": 9.0, "trace_DB": 9.0},
            {"level": 0.5, "verdict": "Informative", "trace_DA": 0.0, "trace_DB": 0.0}]
    s = level_stats(recs, 1.0)
    assert s["trials"] == 3 and s["successes"] == 2
    assert s["success_rate"] == pytest.approx(2 / 3)
    assert s["mean_trace_total"] == pytest.approx(4.0)
    assert s["se_trace_total"] == pytest.approx(np.std([3.0, 5.0], ddof=1) / np.sqrt(2))


def test_noiseless_trial_needs_no_distance():
    rec = run_trial(0.0, 0, seed=0, oracle_samples=20)
    assert rec["verdict"] == "Informative"
    assert rec["trace_DA"] + rec["trace_DB"] <= 1e-4
    assert rec["matching_violations"] == 0 and rec["stability_violations"] == 0


def test_trial_is_reproducible():
    a = run_trial(0.7, 2, seed=5)
    b = run_trial(0.7, 2, seed=5)
    a.pop("seconds"), b.pop("seconds")
    assert a.keys() == b.keys()
    for k in a:
        same = (a[k] == b[k] or (isinstance(a[k], float) and np.isnan(a[k]) and np.isnan(b[k])))
        assert same, k


@pytest.fixture(scope="module")
def small_sweep(tmp_path_factory):
    out = tmp_path_factory.mktemp("sweep")
    res = run_sweep([0.0, 0.5], trials=3, seed=1, out_dir=str(out), oracle_samples=10,
                    error_levels=[0.0], error_steps=50, plots=True)
    return out, res


def test_sweep_outputs(small_sweep):
    out, res = small_sweep
    names = {p.name for p in out.iterdir()}
    for f in ("success_rates.csv", "trace_stats.csv", "trials.csv", "error_level_0.csv",
              "traces.png", "success_rate.png", "tracking_error.png"):
        assert f in names
    with open(out / "trials.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 6
    assert res.stat(0.0)["success_rate"] == 1.0


def test_parallel_matches_serial(small_sweep):
    _, res = small_sweep
    par = run_sweep([0.0, 0.5], trials=3, seed=1, jobs=2, error_levels=[])
    key = lambda r: (r["level"], r["trial"], r["verdict"])
    assert sorted(map(key, par.records)) == sorted(map(key, res.records))


def test_cli_experiment(tmp_path, capsys):
    code = main(["experiment", "--levels", "0,0.2", "--trials", "2", "--out-dir",
                 str(tmp_path), "--error-levels", "0", "--error-steps", "20", "--no-plots",
                 "--samples", "5"])
    assert code == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0].startswith("level,trials,success_rate")
    assert len(lines) == 3
    assert not list(tmp_path.glob("*.png"))
