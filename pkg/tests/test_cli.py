"""Benchmark harness and the command-line front end."""

import csv
import io
import json
from pathlib import Path

import numpy as np
import pytest

import gelnet.driver as drv
from gelnet import bench as gbench
from gelnet import cli
from gelnet.exceptions import SolverFailure
from gelnet.runconfig import RunConfig
from gelnet.selftest import CheckResult

CONFIGS = Path(__file__).parent.parent / "configs"

SMALL = {
    "seed": 5,
    "data": {"synthetic": {"n": 30, "p": 60, "K": 3, "R": 10.0, "kappa": 0.3}},
    "penalty": {"q": 0.5, "lambda1": 0.2, "lambda2": 1e-3},
    "solver": {"pmm_ssn": {"mu": 1e-3}, "admm": {"sigma": 0.1}},
    "bench": {"trials": 2, "cells": [{"label": "GN", "noise_kind": "GN", "r": "2"},
                                     {"label": "UN", "noise_kind": "UN", "r": "inf",
                                      "mu": 1e-5}]},
}


def small_config(**bench):
    d = json.loads(json.dumps(SMALL))
    d["bench"].update(bench)
    return RunConfig.from_dict(d)


def test_trial_seeds_are_stable_and_distinct():
    a = gbench.trial_seed(2024, 3, 7)
    assert a == gbench.trial_seed(2024, 3, 7)
    seeds = {gbench.trial_seed(2024, c, t) for c in range(10) for t in range(50)}
    assert len(seeds) == 500


def test_figure2_grid_cardinality():
    cfg = RunConfig.load(CONFIGS / "figure2.json")
    cells, jobs = gbench.build_jobs(cfg)
    per_noise = {}
    for c in cells:
        per_noise[c["noise_kind"]] = per_noise.get(c["noise_kind"], 0) + 1
    assert per_noise == {"LN": 55, "GN": 55, "UN": 55}
    assert len(jobs) == 165 * len(cfg.bench.solvers) * cfg.bench.trials
    assert len({c["label"] for c in cells}) == 165


@pytest.fixture(scope="module")
def small_rows():
    return gbench.run_bench(small_config())


def test_bench_rows_and_schema(small_rows):
    rows, results = small_rows
    assert [(r["cell_id"], r["solver"]) for r in rows] == [
        ("GN", "pmm_ssn"), ("GN", "admm"), ("UN", "pmm_ssn"), ("UN", "admm")]
    assert len(results) == 8
    text = gbench.rows_to_csv(rows)
    parsed = gbench.read_csv_rows(text)
    assert list(parsed[0]) == gbench.BASE_COLUMNS + [gbench.TIME_COLUMN]
    assert text.endswith("\r\n")
    for r in parsed:
        assert r["schema"] == gbench.CSV_SCHEMA and r["failures"] == "0"
        assert r["monotone_all"] == "true"
        assert len(r["trial_seeds"].split(";")) == 2
    assert cli.bench_ok(rows)
    no_time = gbench.read_csv_rows(gbench.rows_to_csv(rows, timing=False))
    assert gbench.TIME_COLUMN not in no_time[0]


def test_bench_serial_equals_parallel(small_rows):
    cfg = small_config()
    serial = gbench.rows_to_csv(small_rows[0], timing=False)
    parallel = gbench.rows_to_csv(gbench.run_bench(cfg, workers=2)[0], timing=False)
    assert serial == parallel


def test_single_trial_equals_fit():
    cfg = small_config(trials=1, solvers=["pmm_ssn"],
                       cells=[{"label": "GN", "noise_kind": "GN"}])
    rows, _ = gbench.run_bench(cfg)
    row = rows[0]
    seed = int(row["trial_seeds"])
    fit_cfg = RunConfig.from_dict({**cfg.to_dict(), "seed": seed,
                                   "data": {"synthetic": {**SMALL["data"]["synthetic"],
                                                          "noise_kind": "GN"}}})
    rep, ds = cli.cmd_fit(fit_cfg, json_path="", stream=io.StringIO())
    re = np.linalg.norm(rep.beta_hat - ds.beta_true) / np.linalg.norm(ds.beta_true)
    assert row["re"] == re
    assert row["iter_mean"] == rep.total_iters
    assert row["outer_mean"] == rep.outer_iters


def test_failed_cells_are_recorded_and_quoted():
    cfg = small_config(trials=1, solvers=["admm"], cells=[{"label": "bad", "K": 40}])
    rows, _ = gbench.run_bench(cfg)
    assert rows[0]["failures"] == 1 and "K=40, n=30" in rows[0]["error"]
    assert not cli.bench_ok(rows)
    text = gbench.rows_to_csv(rows)
    assert '"ConfigurationError: need 0 < K < n, got K=40, n=30"' in text
    back = list(csv.DictReader(io.StringIO(text)))
    assert back[0]["error"] == rows[0]["error"]


def test_trials_csv(small_rows):
    rows, results = small_rows
    cells, _ = gbench.build_jobs(small_config())
    table = gbench.read_csv_rows(gbench.trials_to_csv(results, cells))
    assert len(table) == 8 and list(table[0]) == gbench.TRIAL_COLUMNS
    assert {r["cell_id"] for r in table} == {"GN", "UN"}


def test_generate_is_deterministic(tmp_path):
    args = ["generate", "--out-dir", str(tmp_path), "--n", "12", "--p", "20", "--K", "2",
            "--kappa", "0.3", "--seed", "4"]
    assert cli.main(args + ["--output", "a"]) == 0
    assert cli.main(args + ["--output", "b"]) == 0
    for name in ("X.csv", "y.csv", "beta_true.csv", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    X = np.loadtxt(tmp_path / "a" / "X.csv", delimiter=",", skiprows=1)
    assert X.shape == (12, 20)
    man = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert man["synthetic"]["kappa"] == 0.3 and man["seed"] == 4
    assert RunConfig.from_dict(man["config"]).data.synthetic["kappa"] == 0.3


def test_generate_then_fit_from_files(tmp_path, capsys):
    base = ["--out-dir", str(tmp_path), "--n", "30", "--p", "60", "--K", "3", "--R", "10",
            "--seed", "1"]
    assert cli.main(["generate", "--output", "csvdata", *base]) == 0
    assert cli.main(["generate", "--output", "svm", "--format", "libsvm", *base]) == 0
    assert cli.main(["fit", "--csv-dir", str(tmp_path / "csvdata"), "--lambda2", "1e-3",
                     "--out-dir", str(tmp_path), "--json", "a.json"]) == 0
    assert cli.main(["fit", "--libsvm", str(tmp_path / "svm" / "data.libsvm"),
                     "--lambda2", "1e-3", "--out-dir", str(tmp_path), "--json", "b.json"]) == 0
    a = json.loads((tmp_path / "a.json").read_text())["report"]
    b = json.loads((tmp_path / "b.json").read_text())["report"]
    assert a["beta_hat"] == b["beta_hat"]
    assert "support size" in capsys.readouterr().out


def write_zero_dataset(directory):
    directory.mkdir()
    X = np.random.default_rng(0).normal(size=(6, 9))
    (directory / "X.csv").write_text(cli._matrix_csv(X, [f"x{j}" for j in range(9)]))
    (directory / "y.csv").write_text(cli._matrix_csv(np.zeros((6, 1)), ["y"]))


def test_zero_data_fit(tmp_path, capsys):
    write_zero_dataset(tmp_path / "zero")
    assert cli.main(["fit", "--csv-dir", str(tmp_path / "zero"), "--json", "-"]) == 0
    out = capsys.readouterr().out
    assert "support size      0" in out
    payload = json.loads(out.strip().splitlines()[-1])
    assert payload["report"]["beta_hat"] == [0.0] * 9


def test_exit_codes(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv(cli.ENV_OUTPUT_DIR, str(tmp_path))
    small = ["--n", "30", "--p", "60", "--K", "3", "--R", "10"]
    assert cli.main(["fit", *small, "--max-outer-iters", "1"]) == cli.EXIT_NOT_CONVERGED
    assert (tmp_path / "fit.json").exists()
    assert cli.main(["fit", *small, "--q", "2"]) == cli.EXIT_CONFIG
    assert cli.main(["fit", "--config", str(tmp_path / "missing.json")]) == cli.EXIT_DATA
    assert cli.main(["fit", "--libsvm", str(tmp_path / "missing.svm")]) == cli.EXIT_DATA
    (tmp_path / "bad.svm").write_text("1 1:2\nbad\n")
    assert cli.main(["fit", "--libsvm", str(tmp_path / "bad.svm")]) == cli.EXIT_DATA
    assert "line 2" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        cli.main(["fit", "--r", "3"])
    assert exc.value.code == cli.EXIT_USAGE

    def broken(*args):
        raise SolverFailure("no descent")

    monkeypatch.setattr(drv, "_inner_solve", broken)
    assert cli.main(["fit", *small]) == cli.EXIT_SOLVER


def test_bench_command(tmp_path, capsys):
    cfg = small_config(trials=1)
    cfg.save(tmp_path / "small.json")
    assert cli.main(["bench", "--config", str(tmp_path / "small.json"), "--csv", "-",
                     "--no-timing"]) == 0
    rows = gbench.read_csv_rows(capsys.readouterr().out)
    assert len(rows) == 4 and gbench.TIME_COLUMN not in rows[0]
    assert cli.main(["bench", "--config", str(tmp_path / "small.json"), "--trials", "1",
                     "--out-dir", str(tmp_path), "--csv", "s.csv",
                     "--trials-csv", "t.csv"]) == 0
    assert len(gbench.read_csv_rows((tmp_path / "t.csv").read_text())) == 4


def test_prox_selftest_command(capsys, monkeypatch):
    assert cli.main(["prox-selftest", "--pairs", "50", "--competitors", "20"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines and all(line.startswith("PASS") for line in lines)
    fail = CheckResult("l1", "moreau", False, 1.0, 1)
    monkeypatch.setattr(cli, "run_prox_selftest", lambda *a: [fail])
    assert cli.main(["prox-selftest"]) == cli.EXIT_SELFTEST
