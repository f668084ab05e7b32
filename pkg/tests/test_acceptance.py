"""Acceptance suite: every criterion at its stated tolerance.

Each check is logged through the ``acceptance`` fixture, which prints a
PASS/FAIL line as it runs and a per-criterion summary at the end of the
session. Run it on its own with ``pytest tests/test_acceptance.py -v``.
"""

import json
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from gelnet import bench as gbench
from gelnet.admm import AdmmOptions, solve_subproblem_admm
from gelnet.data import Dataset, SyntheticConfig, generate
from gelnet.driver import SolverOptions, fit, fixed_point_check
from gelnet.penalty import PenaltySpec, objective_F_weighted
from gelnet.pmm_ssn import DualObjective, PmmOptions, solve_subproblem_pmm_ssn
from gelnet.prox import NormKind, WeightedL1, jacobian_prox, moreau_envelope, prox
from gelnet.runconfig import RunConfig
from gelnet.selftest import run_prox_selftest
from oracles import central_difference, subproblem_value, weighted_subproblem

CONFIGS = Path(__file__).parent.parent / "configs"

pytestmark = pytest.mark.slow


def rel_err(a, b) -> float:
    """``||a - b|| / ||b||``, with ``0/0`` read as zero."""
    den = np.linalg.norm(b)
    num = np.linalg.norm(np.asarray(a) - np.asarray(b))
    return float(num / den) if den > 0 else float(num)


def run_cells(config: RunConfig, keep=lambda cell: True, workers: int = 1):
    """Bench the kept cells of ``config`` without renumbering them.

    Trial seeds depend on the cell index in the preset, so filtering jobs
    keeps the seeds of a full preset run.
    """
    cells, jobs = gbench.build_jobs(config)
    jobs = [j for j in jobs if keep(j.cell)]
    results = gbench.run_jobs(jobs, workers)
    grouped = {}
    for r in results:
        grouped.setdefault((r["cell_index"], r["solver"]), []).append(r)
    rows = [gbench.summarize(config, ci, cells[ci], solver, grouped[(ci, solver)])
            for ci in sorted({j.cell_index for j in jobs})
            for solver in config.bench.solvers]
    for r in results:
        r["cell_id"] = cells[r["cell_index"]]["label"]
    return rows, results


def with_trials(path, trials):
    d = json.loads(Path(path).read_text())
    d["bench"]["trials"] = trials
    return RunConfig.from_dict(d)


# -- criterion 1: prox property suite ---------------------------------------

def test_criterion1_prox_property_suite(acceptance):
    t0 = time.perf_counter()
    results = run_prox_selftest(1000, 100)
    elapsed = time.perf_counter() - t0
    ok = True
    for r in results:
        ok &= acceptance.check(1, f"{r.kind}/{r.prop}", r.passed,
                               f"worst={r.worst:.2e} pairs={r.cases}")
    ok &= acceptance.check(1, "runtime", elapsed < 10.0, f"{elapsed:.1f}s < 10s")
    assert ok


# -- criterion 2: derivative oracles ----------------------------------------

H = 1e-6
MARGIN = 1e-3


def l1_ball_threshold(a, t):
    """Bisection for ``sum(max(a - tau, 0)) = t`` with ``a >= 0``."""
    lo, hi = 0.0, float(a.max())
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if np.maximum(a - mid, 0.0).sum() > t:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def branch_margin(kind, x, t) -> float:
    """Distance of ``x`` to the nearest branch switch of ``Prox_{tf}``."""
    a = np.abs(x)
    if isinstance(kind, WeightedL1):
        return float(np.min(np.abs(a - t * kind.weights)))
    kind = NormKind.parse(kind)
    if kind is NormKind.L1:
        return float(np.min(np.abs(a - t)))
    if kind is NormKind.L2:
        return abs(float(np.linalg.norm(x)) - t)
    total = float(a.sum())
    if total <= t:
        return t - total
    tau = l1_ball_threshold(a, t)
    return min(total - t, float(np.min(np.abs(a - tau))))


def draw_points(rng, kind_factory, count):
    points, rejected = [], 0
    while len(points) < count:
        dim = int(rng.integers(1, 9))
        x = rng.normal(scale=rng.uniform(0.5, 3.0), size=dim)
        t = rng.uniform(0.2, 2.0)
        kind = kind_factory(dim)
        if branch_margin(kind, x, t) < MARGIN:
            rejected += 1
            continue
        points.append((kind, x, t))
    return points, rejected


KIND_FACTORIES = {
    "l1": lambda dim: NormKind.L1,
    "l2": lambda dim: NormKind.L2,
    "linf": lambda dim: NormKind.LINF,
}


def test_criterion2_derivative_oracles(acceptance):
    t0 = time.perf_counter()
    rng = np.random.default_rng(77)
    factories = dict(KIND_FACTORIES)
    factories["weighted_l1"] = lambda dim: WeightedL1(rng.uniform(0.5, 2.0, dim))
    ok = True
    for name, factory in factories.items():
        points, rejected = draw_points(rng, factory, 50)
        worst_env = worst_jac = 0.0
        for kind, x, t in points:
            _, g = moreau_envelope(kind, x, t)
            fd = central_difference(lambda v: moreau_envelope(kind, v, t)[0], x, H)
            worst_env = max(worst_env, rel_err(g, fd))
            J = jacobian_prox(kind, x, t).to_dense()
            fdJ = np.column_stack([(prox(kind, x + H * e, t).point
                                    - prox(kind, x - H * e, t).point) / (2 * H)
                                   for e in np.eye(x.size)])
            worst_jac = max(worst_jac, rel_err(J, fdJ))
        ok &= acceptance.check(2, f"{name}/envelope_gradient", worst_env <= 1e-6,
                               f"worst rel err={worst_env:.2e} points=50 skipped={rejected}")
        ok &= acceptance.check(2, f"{name}/prox_jacobian", worst_jac <= 1e-6,
                               f"worst rel err={worst_jac:.2e} points=50")

    for r in ("1", "2", "inf"):
        worst, accepted, rejected = 0.0, 0, 0
        inst = np.random.default_rng({"1": 1, "2": 2, "inf": 3}[r])
        data = Dataset(inst.normal(size=(7, 9)), inst.normal(size=7))
        spec = PenaltySpec(r, 0.5, 0.3, 0.2)
        w = inst.uniform(0.3, 2.0, 9)
        mu = 0.7
        dual = DualObjective(data, spec, w, inst.normal(size=9), mu)
        while accepted < 50:
            u = rng.normal(scale=2.0, size=7)
            st = dual.state(u)
            m_beta = float(np.min(np.abs(np.abs(st.XTu) - dual.pen)))
            m_eta = branch_margin(spec.r, st.eta_arg, 1.0 / mu)
            if min(m_beta, m_eta * mu) < MARGIN:
                rejected += 1
                continue
            fd = central_difference(dual.value, u, H)
            worst = max(worst, rel_err(st.gradient, fd))
            accepted += 1
        ok &= acceptance.check(2, f"grad_theta/r={r}", worst <= 1e-6,
                               f"worst rel err={worst:.2e} duals=50 skipped={rejected}")
    elapsed = time.perf_counter() - t0
    ok &= acceptance.check(2, "runtime", elapsed < 30.0, f"{elapsed:.1f}s < 30s")
    assert ok


# -- criterion 3: subproblem oracle equivalence ------------------------------

def tiny_instances(count=20, seed=2024):
    rng = np.random.default_rng(seed)
    for i in range(count):
        n, p = int(rng.integers(2, 7)), int(rng.integers(2, 7))
        r = ("1", "2", "inf")[i % 3]
        yield dict(
            X=rng.normal(size=(n, p)), y=rng.normal(size=n), r=r,
            q=float(rng.uniform(0.3, 0.9)), lambda1=float(rng.uniform(0.05, 0.5)),
            lambda2=float(rng.uniform(0.01, 0.2)), w=rng.uniform(0.2, 3.0, p))


def test_criterion3_subproblem_oracle_equivalence(acceptance):
    t0 = time.perf_counter()
    # at mu = 1e-6 the dual gradient carries ~1e-10 of rounding; 1e-10 is attainable
    pmm_opts = PmmOptions(mu=1e-6, ssn_tol=1e-10, max_newton_iters=5000)
    admm_opts = AdmmOptions(sigma=1.0, inner_tol=1e-10, max_inner_iters=100_000)
    worst = {"pmm_ssn": 0.0, "admm": 0.0}
    unconverged = {"pmm_ssn": 0, "admm": 0}
    for inst in tiny_instances():
        data = Dataset(inst["X"], inst["y"])
        spec = PenaltySpec(inst["r"], inst["q"], inst["lambda1"], inst["lambda2"])
        w = inst["w"]
        _, ref = weighted_subproblem(inst["X"], inst["y"], inst["r"], inst["q"],
                                     inst["lambda1"], inst["lambda2"], w)
        p = inst["X"].shape[1]
        pmm = solve_subproblem_pmm_ssn(np.zeros(p), data, spec, w, pmm_opts)
        admm = solve_subproblem_admm(np.zeros(p), data, spec, w, admm_opts)
        for name, res in (("pmm_ssn", pmm), ("admm", admm)):
            gap = abs(objective_F_weighted(res.beta, data, spec, w) - ref)
            worst[name] = max(worst[name], gap)
            unconverged[name] += not res.converged
    elapsed = time.perf_counter() - t0
    ok = True
    for name, gap in worst.items():
        ok &= acceptance.check(3, name, gap <= 1e-5 and unconverged[name] == 0,
                               f"worst |value - oracle|={gap:.2e} over 20, "
                               f"unconverged={unconverged[name]}")
    ok &= acceptance.check(3, "runtime", elapsed < 60.0, f"{elapsed:.1f}s < 60s")
    assert ok


# -- benchmark runs shared by criteria 4-7 and 10 -----------------------------

NOISES = ("LN", "GN", "UN")
FIXED_TRIALS = 2


@pytest.fixture(scope="module")
def fixed_design_runs():
    t0 = time.perf_counter()
    out = {}
    for noise in NOISES:
        out[noise] = run_cells(with_trials(CONFIGS / f"fixed_design_{noise}.json", FIXED_TRIALS))
    return out, time.perf_counter() - t0


@pytest.fixture(scope="module")
def table1_gn_runs():
    t0 = time.perf_counter()
    cfg = with_trials(CONFIGS / "table1.json", 10)
    rows, results = run_cells(cfg, keep=lambda c: c["noise_kind"] == "GN")
    return rows, results, time.perf_counter() - t0


@pytest.fixture(scope="module")
def table1_other_runs():
    # LN and UN rows of the same preset, one trial each, for the invariants
    cfg = with_trials(CONFIGS / "table1.json", 1)
    return run_cells(cfg, keep=lambda c: c["noise_kind"] != "GN")


@pytest.fixture(scope="module")
def determinism_runs():
    cfg = with_trials(CONFIGS / "table1.json", 2)
    keep = lambda c: c["noise_kind"] == "GN"  # noqa: E731
    serial = run_cells(cfg, keep, workers=1)
    parallel = run_cells(cfg, keep, workers=2)
    return serial, parallel


def all_results(fixed_design_runs, table1_gn_runs, table1_other_runs, determinism_runs):
    runs = []
    for noise in NOISES:
        runs.extend(fixed_design_runs[0][noise][1])
    runs.extend(table1_gn_runs[1])
    runs.extend(table1_other_runs[1])
    for rows, results in determinism_runs:
        runs.extend(results)
    return runs


def run_id(r):
    return f"{r['cell_id']}/{r['solver']}/trial{r['trial']}"


# -- criterion 4: outer-loop descent -----------------------------------------

def test_criterion4_outer_loop_descent(acceptance, fixed_design_runs, table1_gn_runs,
                                       table1_other_runs, determinism_runs):
    runs = all_results(fixed_design_runs, table1_gn_runs, table1_other_runs, determinism_runs)
    failed = [run_id(r) for r in runs if r["failure"] is not None]
    broken = [run_id(r) for r in runs if r["failure"] is None and not r["monotone"]]
    ok = acceptance.check(4, "no_failed_runs", not failed, f"failed={failed[:5]}")
    ok &= acceptance.check(4, "F_eps_non_increasing", not broken,
                           f"runs={len(runs)} violations={broken[:5]}")
    assert ok


# -- criterion 5: lower-bound certification ----------------------------------

def test_criterion5_lower_bound(acceptance, fixed_design_runs, table1_gn_runs,
                                table1_other_runs, determinism_runs):
    runs = all_results(fixed_design_runs, table1_gn_runs, table1_other_runs, determinism_runs)
    certified = [r for r in runs if r.get("lower_bound") is not None]
    broken = [run_id(r) for r in certified if not r["lower_bound"]]
    ok = acceptance.check(5, "support_above_bound", certified and not broken,
                          f"certified={len(certified)}/{len(runs)} violations={broken[:5]}")
    assert ok


# -- criterion 6: fixed-design reproduction ----------------------------------

def exact_support(r) -> bool:
    return bool(np.array_equal(np.sign(r["beta_hat"]), np.sign(r["beta_true"])))


RE_BOUND = {"LN": 5e-2, "GN": 5e-2, "UN": 5e-3}


def test_criterion6_fixed_design_error_and_runtime(acceptance, fixed_design_runs):
    runs, elapsed = fixed_design_runs
    ok = True
    for noise in NOISES:
        for row in runs[noise][0]:
            ok &= acceptance.check(
                6, f"{noise}/{row['solver']}/RE", row["re"] <= RE_BOUND[noise],
                f"mean RE={row['re']:.2e} <= {RE_BOUND[noise]:g} trials={row['completed']}")
    ok &= acceptance.check(6, "runtime", elapsed < 120.0, f"{elapsed:.1f}s < 120s")
    assert ok


@pytest.mark.parametrize("solver", [
    "admm",
    pytest.param("pmm_ssn", marks=pytest.mark.xfail(
        strict=True, reason="the q = 1 minimizer is dense; see the decisions ledger")),
])
def test_criterion6_fixed_design_support(acceptance, fixed_design_runs, solver):
    runs, _ = fixed_design_runs
    ok = True
    for noise in NOISES:
        trials = [r for r in runs[noise][1] if r["solver"] == solver]
        exact = [exact_support(r) for r in trials]
        sizes = [int(np.count_nonzero(r["beta_hat"])) for r in trials]
        ok &= acceptance.check(6, f"{noise}/{solver}/support", all(exact),
                               f"exact={sum(exact)}/{len(trials)} support sizes={sizes}")
    assert ok


# -- criterion 7: Table 1 trend ----------------------------------------------

def test_criterion7_table1_trend(acceptance, table1_gn_runs):
    rows, _, elapsed = table1_gn_runs
    ok = True
    by_cell = {}
    for row in rows:
        by_cell.setdefault(row["cell_id"], {})[row["solver"]] = row
        ok &= acceptance.check(7, f"{row['cell_id']}/{row['solver']}/RE",
                               row["completed"] == 10 and row["re"] <= 1e-3,
                               f"mean RE={row['re']:.2e} <= 1e-3 trials={row['completed']}")
    for cell, pair in by_cell.items():
        pmm, admm = pair["pmm_ssn"]["iter_mean"], pair["admm"]["iter_mean"]
        ok &= acceptance.check(7, f"{cell}/iterations", pmm < admm,
                               f"PMM-SSN {pmm:.1f} < ADMM {admm:.1f}")
    ok &= acceptance.check(7, "runtime", elapsed < 600.0, f"{elapsed:.1f}s < 600s")
    assert ok


# -- criterion 8: mu-continuity ------------------------------------------------

def test_criterion8_mu_continuity(acceptance):
    rng = np.random.default_rng(0)
    X, y = rng.normal(size=(5, 6)), rng.normal(size=5)
    w = rng.uniform(0.5, 2.0, 6)
    data = Dataset(X, y)
    ok = True
    for r in ("1", "2", "inf"):
        spec = PenaltySpec(r, 0.5, 0.3, 0.1)
        ref = solve_subproblem_admm(np.zeros(6), data, spec, w,
                                    AdmmOptions(sigma=1.0, inner_tol=1e-12,
                                                max_inner_iters=200_000))
        target = objective_F_weighted(ref.beta, data, spec, w)
        _, conic = weighted_subproblem(X, y, r, 0.5, 0.3, 0.1, w)
        ok &= acceptance.check(8, f"r={r}/reference", abs(target - conic) <= 1e-9,
                               f"|ADMM - conic|={abs(target - conic):.1e}")
        gaps = []
        for mu in (1e-2, 1e-4, 1e-6):
            res = solve_subproblem_pmm_ssn(np.zeros(6), data, spec, w,
                                           PmmOptions(mu=mu, ssn_tol=1e-10,
                                                      max_newton_iters=5000))
            ok &= acceptance.check(8, f"r={r}/mu={mu:.0e}/solved", res.converged,
                                   f"Newton steps={res.iterations}")
            value = subproblem_value(X, y, r, 0.5, 0.3, 0.1, w, res.beta, mu=mu)
            gaps.append(abs(value - target))
        monotone = gaps[0] > gaps[1] > gaps[2]
        ok &= acceptance.check(8, f"r={r}/gaps", monotone and gaps[-1] <= 1e-6,
                               "gaps=" + ", ".join(f"{g:.1e}" for g in gaps))
    assert ok


# -- criterion 9: fixed-point property ---------------------------------------

DESK = [
    dict(seed=100, noise_kind="GN"),
    dict(seed=101, noise_kind="LN"),
    dict(seed=102, noise_kind="UN"),
    dict(seed=103, noise_kind="GN"),
    dict(seed=104, noise_kind="LN"),
]
DESK_SPEC = {
    "GN": PenaltySpec("2", 0.5, 0.2, 1e-4),
    "LN": PenaltySpec("1", 0.5, 0.2, 1e-4),
    "UN": PenaltySpec("inf", 0.5, 0.04, 1e-6),
}


def test_criterion9_fixed_point(acceptance):
    ok = True
    for inst in DESK:
        d = generate(SyntheticConfig(n=100, p=300, K=5, kappa=0.3, **inst))
        spec = DESK_SPEC[inst["noise_kind"]]
        mu = 1e-5 if inst["noise_kind"] == "UN" else 1e-3
        for solver in ("pmm_ssn", "admm"):
            opts = SolverOptions(solver=solver, pmm_ssn=PmmOptions(mu=mu, ssn_tol=1e-8))
            rep = fit(d, spec, opts)
            fixed = rep.converged and fixed_point_check(rep.beta_hat, d, rep.spec, opts)
            ok &= acceptance.check(9, f"seed{inst['seed']}/{inst['noise_kind']}/{solver}", fixed,
                                   f"converged={rep.converged} outer={rep.outer_iters}")
    assert ok


# -- criterion 10: determinism -------------------------------------------------

def test_criterion10_fit_determinism(acceptance):
    cfg = RunConfig.load(CONFIGS / "table1.json")
    cells = gbench.expand_cells(cfg)
    ok = True
    for ci in (1, 4, 7):
        cell = cells[ci]
        d = gbench.load_dataset(cfg, gbench.trial_seed(cfg.seed, ci, 0), cell)
        spec = cfg.penalty.spec(cell)
        for solver in ("pmm_ssn", "admm"):
            opts = gbench._cell_solver_options(cfg, cell, solver)
            a, b = fit(d, spec, opts), fit(d, spec, opts)
            same = (a.to_dict(include_timing=False) == b.to_dict(include_timing=False)
                    and a.beta_hat.tobytes() == b.beta_hat.tobytes())
            ok &= acceptance.check(10, f"{cell['label']}/{solver}/fit_report", same,
                                   "bitwise-identical FitReport")
    assert ok


def test_criterion10_bench_serial_vs_parallel(acceptance, determinism_runs):
    (rows_s, res_s), (rows_p, res_p) = determinism_runs
    csv_s = gbench.rows_to_csv(rows_s, timing=False)
    csv_p = gbench.rows_to_csv(rows_p, timing=False)
    betas = all(a["beta_hat"].tobytes() == b["beta_hat"].tobytes()
                for a, b in zip(res_s, res_p)) and len(res_s) == len(res_p)
    ok = acceptance.check(10, "bench_csv", csv_s == csv_p,
                          f"serial vs 2 workers, {len(rows_s)} rows")
    ok &= acceptance.check(10, "bench_betas", betas, f"{len(res_s)} trials")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
