"""Repeated-trial benchmarks over grids of data and model settings.

Each cell of the grid runs ``trials`` seeded fits per solver and becomes one
CSV row. Trial seeds come from ``SeedSequence(seed, spawn_key=(cell, trial))``
so every row can be re-run on its own, and results do not depend on how the
trials are spread over worker processes.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from . import data as gdata
from .driver import fit
from .exceptions import ConfigurationError
from .runconfig import PENALTY_KEYS, SYNTHETIC_KEYS, RunConfig

CSV_SCHEMA = "gelnet-bench/1"

BASE_COLUMNS = [
    "schema", "cell_id", "solver", "noise", "r", "q", "lambda1", "lambda2", "K", "n", "p",
    "kappa", "R", "alpha", "mu", "sigma", "trials", "completed", "failures",
    "re", "mse", "sd", "iter_mean", "outer_mean", "inner_mean", "eta1_mean",
    "converged_frac", "monotone_all", "lower_bound_all", "seed", "trial_seeds", "error",
]
TIME_COLUMN = "time_mean"

TRIAL_COLUMNS = [
    "schema", "cell_id", "solver", "trial", "trial_seed", "re", "mse", "sd", "iters",
    "outer_iters", "inner_iters", "eta1", "eta2", "objective", "support_size", "converged",
    "monotone", "lower_bound", "failure",
]


def trial_seed(seed: int, cell_index: int, trial: int) -> int:
    """Deterministic per-trial seed, independent of scheduling."""
    ss = np.random.SeedSequence(seed, spawn_key=(cell_index, trial))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def expand_cells(config: RunConfig) -> List[dict]:
    """Cells times the Cartesian product of the sweep lists, in file order."""
    sweep = config.bench.sweep
    combos = list(itertools.product(*sweep.values())) if sweep else [()]
    out = []
    for i, cell in enumerate(config.bench.cells):
        for combo in combos:
            c = dict(cell)
            c.update(dict(zip(sweep.keys(), combo)))
            base = c.pop("label", None) or f"c{i}"
            if sweep:
                base += "".join(f"_{k}={v}" for k, v in zip(sweep.keys(), combo))
            c["label"] = base
            out.append(c)
    return out


@dataclass
class TrialJob:
    config: RunConfig
    cell_index: int
    cell: dict
    solver: str
    trial: int

    @property
    def seed(self) -> int:
        return trial_seed(self.config.seed, self.cell_index, self.trial)


def _cell_solver_options(config: RunConfig, cell: dict, solver: str):
    opts = config.solver
    pmm, admm = opts.pmm_ssn, opts.admm
    if "mu" in cell:
        pmm = replace(pmm, mu=float(cell["mu"]))
    if "sigma" in cell:
        admm = replace(admm, sigma=float(cell["sigma"]))
    return replace(opts, solver=solver, pmm_ssn=pmm, admm=admm)


def load_dataset(config: RunConfig, seed: int, cell: Optional[dict] = None) -> gdata.Dataset:
    """Materialize the data source of ``config`` (synthetic draws use ``seed``)."""
    src = config.data
    if src.kind == "synthetic":
        return gdata.generate(src.synthetic_config(seed, cell))
    if src.kind == "libsvm":
        ds = gdata.read_libsvm(src.path, n_features=src.n_features)
    else:
        ds = read_csv_dataset(src.path)
    X, y = ds.X, ds.y
    if src.degree > 1:
        X = gdata.polynomial_expand(X, src.degree, include_bias=src.include_bias)
    if src.standardize:
        X, y = gdata.standardize(X, y)
    return gdata.Dataset(X, y, ds.beta_true, provenance=ds.provenance)


def read_csv_dataset(directory) -> gdata.Dataset:
    """Read the ``X.csv`` / ``y.csv`` / optional ``beta_true.csv`` layout of ``generate``."""
    d = Path(directory)
    X = np.loadtxt(d / "X.csv", delimiter=",", skiprows=1, ndmin=2)
    y = np.loadtxt(d / "y.csv", delimiter=",", skiprows=1, ndmin=1)
    beta_path = d / "beta_true.csv"
    beta = np.loadtxt(beta_path, delimiter=",", skiprows=1, ndmin=1) if beta_path.exists() else None
    return gdata.Dataset(X, y, beta, provenance=str(d))


def run_trial(job: TrialJob) -> dict:
    """One seeded fit; errors are caught and reported in the result."""
    seed = job.seed
    out = {"cell_index": job.cell_index, "solver": job.solver, "trial": job.trial,
           "trial_seed": seed, "failure": None}
    try:
        ds = load_dataset(job.config, seed, job.cell)
        spec = job.config.penalty.spec(job.cell)
        opts = _cell_solver_options(job.config, job.cell, job.solver)
        rep = fit(ds, spec, opts)
    except Exception as exc:  # recorded per row, the run continues
        out["failure"] = f"{type(exc).__name__}: {exc}"
        return out
    out.update(
        beta_hat=rep.beta_hat, beta_true=ds.beta_true, p=ds.p,
        iters=rep.total_iters, outer_iters=rep.outer_iters, inner_iters=rep.inner_iters_total,
        eta1=rep.eta1_final, eta2=rep.eta2_final, objective=rep.objective_trace[-1],
        support_size=int(rep.support.size), converged=rep.converged,
        monotone=rep.objective_monotone(),
        lower_bound=(rep.lower_bound_ok() if rep.converged and rep.epsilon_admissible else None),
        time=rep.wall_time, failure=rep.failure,
    )
    return out


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _mean(vals) -> Optional[float]:
    vals = [float(v) for v in vals if v is not None]
    return float(np.mean(vals)) if vals else None


def _all(vals) -> Optional[bool]:
    vals = [bool(v) for v in vals if v is not None]
    return all(vals) if vals else None


def _cell_params(config: RunConfig, cell: dict) -> dict:
    syn = dict(config.data.synthetic)
    syn.update({k: v for k, v in cell.items() if k in SYNTHETIC_KEYS})
    pen = {k: getattr(config.penalty, k) for k in PENALTY_KEYS}
    pen.update({k: v for k, v in cell.items() if k in PENALTY_KEYS})
    defaults = gdata.SyntheticConfig()
    synthetic = config.data.kind == "synthetic"

    def s(key):
        return syn.get(key, getattr(defaults, key)) if synthetic else None

    noise = s("noise_kind")
    return {
        "noise": gdata.NoiseKind.parse(noise).value if noise is not None else None,
        "r": str(pen["r"]), "q": pen["q"], "lambda1": pen["lambda1"], "lambda2": pen["lambda2"],
        "K": s("K"), "n": s("n"), "p": s("p"), "kappa": s("kappa"), "R": s("R"),
        "alpha": s("alpha"),
        "mu": cell.get("mu", config.solver.pmm_ssn.mu),
        "sigma": cell.get("sigma", config.solver.admm.sigma),
    }


def summarize(config: RunConfig, cell_index: int, cell: dict, solver: str,
              results: List[dict]) -> dict:
    """Aggregate the trials of one (cell, solver) pair into a CSV row."""
    ok = [r for r in results if r.get("failure") is None and "beta_hat" in r]
    bad = [r for r in results if r.get("failure") is not None or "beta_hat" not in r]
    row = {"schema": CSV_SCHEMA, "cell_id": cell["label"], "solver": solver}
    row.update(_cell_params(config, cell))
    if solver == "admm":
        row["mu"] = None
    else:
        row["sigma"] = None
    row.update(trials=len(results), completed=len(ok), failures=len(bad),
               seed=config.seed, trial_seeds=";".join(str(r["trial_seed"]) for r in results),
               error=bad[0]["failure"] if bad else None)
    if ok:
        known = [r for r in ok if r["beta_true"] is not None]
        if known:
            m = gdata.metrics([(r["beta_hat"], r["beta_true"], r["p"]) for r in known])
            row.update(re=m.re, mse=m.mse, sd=m.sd)
        row.update(
            iter_mean=_mean(r["iters"] for r in ok),
            outer_mean=_mean(r["outer_iters"] for r in ok),
            inner_mean=_mean(r["inner_iters"] for r in ok),
            eta1_mean=_mean(r["eta1"] for r in ok),
            converged_frac=_mean(float(r["converged"]) for r in ok),
            monotone_all=_all(r["monotone"] for r in ok),
            lower_bound_all=_all(r["lower_bound"] for r in ok),
        )
        row[TIME_COLUMN] = _mean(r["time"] for r in ok)
    return row


def build_jobs(config: RunConfig) -> tuple:
    cells = expand_cells(config)
    jobs = [TrialJob(config, ci, cell, solver, t)
            for ci, cell in enumerate(cells)
            for solver in config.bench.solvers
            for t in range(config.bench.trials)]
    return cells, jobs


def run_jobs(jobs: List[TrialJob], workers: int = 1) -> List[dict]:
    """Results in job order, whatever the number of workers."""
    if workers <= 1 or len(jobs) <= 1:
        return [run_trial(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_trial, jobs, chunksize=1))


def run_bench(config: RunConfig, workers: Optional[int] = None):
    """Run every (cell, solver, trial) job; returns ``(rows, trial_results)``."""
    if config.data.kind != "synthetic" and any(k in c for c in config.bench.cells
                                               for k in SYNTHETIC_KEYS):
        raise ConfigurationError("synthetic overrides in bench.cells need data.kind='synthetic'")
    cells, jobs = build_jobs(config)
    results = run_jobs(jobs, workers or config.bench.workers)
    grouped: Dict[tuple, List[dict]] = {}
    for r in results:
        grouped.setdefault((r["cell_index"], r["solver"]), []).append(r)
    rows = []
    for ci, cell in enumerate(cells):
        for solver in config.bench.solvers:
            rows.append(summarize(config, ci, cell, solver, grouped[(ci, solver)]))
    return rows, results


def rows_to_csv(rows: List[dict], timing: bool = True) -> str:
    cols = BASE_COLUMNS + ([TIME_COLUMN] if timing else [])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(cols)
    for row in rows:
        w.writerow([_fmt(row.get(c)) for c in cols])
    return buf.getvalue()


def trials_to_csv(results: List[dict], cells: List[dict]) -> str:
    """Long-form per-trial table (one row per fit)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(TRIAL_COLUMNS)
    for r in results:
        rec = {"schema": CSV_SCHEMA, "cell_id": cells[r["cell_index"]]["label"], **r}
        if r.get("beta_true") is not None:
            m = gdata.metrics([(r["beta_hat"], r["beta_true"], r["p"])])
            rec.update(re=m.re, mse=m.mse, sd=m.sd)
        w.writerow([_fmt(rec.get(c)) for c in TRIAL_COLUMNS])
    return buf.getvalue()


def read_csv_rows(text: str) -> List[dict]:
    return list(csv.DictReader(io.StringIO(text)))


def parse_float(s: str) -> float:
    return float(s) if s not in ("", None) else math.nan
