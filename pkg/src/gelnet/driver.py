"""The outer iteratively reweighted l1 loop.

Each outer step computes weights from the current iterate, solves the convex
weighted subproblem with ADMM or PMM-SSN, clamps numerically-zero entries
and checks the relative-change rule::

    eta2 = ||beta_new - beta_old|| / max(||beta_old||, 1)

``fit`` records ``F_eps`` after every step; with exact subproblem solves that
sequence is non-increasing.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np

from . import penalty as pen
from .admm import AdmmOptions, solve_subproblem_admm
from .exceptions import ConfigurationError, SolverFailure
from .penalty import PenaltySpec, StationarityReport
from .pmm_ssn import PmmOptions, solve_subproblem_pmm_ssn
from .prox import prox_l1

SOLVERS = ("admm", "pmm_ssn")


@dataclass
class SolverOptions:
    """Outer-loop controls plus the options of both inner solvers.

    ``stop_on`` picks the termination residual: ``"eta2"`` (relative change,
    the default for synthetic data) or ``"eta1"`` (the prox-gradient residual
    used for real data). ``initial_weights="unit"`` replaces the capped
    weights by ones on the first step when ``beta_init`` is all zero; the
    capped weights at zero make ``beta = 0`` a fixed point.
    """

    solver: str = "pmm_ssn"
    admm: AdmmOptions = field(default_factory=AdmmOptions)
    pmm_ssn: PmmOptions = field(default_factory=PmmOptions)
    outer_tol_eta2: float = 1e-4
    outer_tol_eta1: Optional[float] = None
    stop_on: str = "eta2"
    max_outer_iters: int = 2000
    track_objective: bool = True
    initial_weights: str = "unit"
    zero_clamp: float = 1e-12
    stationarity_tol: float = 1e-6

    def __post_init__(self):
        if self.solver not in SOLVERS:
            raise ConfigurationError(f"solver must be one of {SOLVERS}, got {self.solver!r}")
        if self.stop_on not in ("eta2", "eta1"):
            raise ConfigurationError(f"stop_on must be 'eta2' or 'eta1', got {self.stop_on!r}")
        if self.stop_on == "eta1" and self.outer_tol_eta1 is None:
            self.outer_tol_eta1 = 1e-4
        if self.initial_weights not in ("unit", "capped"):
            raise ConfigurationError("initial_weights must be 'unit' or 'capped'")
        if self.max_outer_iters < 1 or not self.outer_tol_eta2 > 0:
            raise ConfigurationError("max_outer_iters must be >= 1 and outer_tol_eta2 > 0")


@dataclass
class FitReport:
    beta_hat: np.ndarray
    outer_iters: int
    inner_iters_total: int
    eta1_final: float
    eta2_final: float
    objective_trace: List[float]
    stationarity: Optional[StationarityReport]
    wall_time: float
    converged: bool
    solver: str
    spec: PenaltySpec
    inner_iters: List[int] = field(default_factory=list)
    inner_converged: List[bool] = field(default_factory=list)
    epsilon_admissible: Optional[bool] = None
    failure: Optional[str] = None

    @property
    def total_iters(self) -> int:
        """Outer steps plus inner sweeps / Newton steps."""
        return self.outer_iters + self.inner_iters_total

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.beta_hat)

    def objective_monotone(self, slack: float = 1e-6) -> bool:
        tr = np.asarray(self.objective_trace)
        return bool(np.all(np.diff(tr) <= slack))

    def lower_bound_ok(self) -> Optional[bool]:
        return None if self.stationarity is None else self.stationarity.bound_satisfied

    def to_dict(self, include_timing: bool = True) -> dict:
        d = {
            "solver": self.solver,
            "converged": self.converged,
            "outer_iters": self.outer_iters,
            "inner_iters_total": self.inner_iters_total,
            "eta1_final": self.eta1_final,
            "eta2_final": self.eta2_final,
            "objective_final": self.objective_trace[-1] if self.objective_trace else None,
            "objective_trace": [float(v) for v in self.objective_trace],
            "support_size": int(self.support.size),
            "support": self.support.tolist(),
            "beta_hat": [float(b) for b in self.beta_hat],
            "inner_iters": [int(k) for k in self.inner_iters],
            "inner_converged": [bool(c) for c in self.inner_converged],
            "epsilon_admissible": None if self.epsilon_admissible is None else bool(self.epsilon_admissible),
            "failure": self.failure,
            "spec": {"r": str(self.spec.r), "q": self.spec.q, "lambda1": self.spec.lambda1,
                     "lambda2": self.spec.lambda2, "epsilon": self.spec.epsilon},
        }
        if self.stationarity is not None:
            d["stationarity_max_abs_residual"] = float(self.stationarity.max_abs_residual)
            d["lower_bound_satisfied"] = bool(self.stationarity.bound_satisfied)
        if include_timing:
            d["wall_time"] = self.wall_time
        return d


def eta1(beta, data, spec: PenaltySpec) -> float:
    """``||b - Prox_{lambda1 ||.||_1}(b - X^T(X b - y))|| / (1 + ||b|| + ||X^T(X b - y)||)``."""
    beta = np.asarray(beta, dtype=float)
    grad = data.X.T @ (data.X @ beta - data.y)
    num = np.linalg.norm(beta - prox_l1(beta - grad, spec.lambda1).point)
    return float(num / (1.0 + np.linalg.norm(beta) + np.linalg.norm(grad)))


def eta2(beta_new, beta_old) -> float:
    beta_new, beta_old = np.asarray(beta_new, float), np.asarray(beta_old, float)
    if beta_new.shape != beta_old.shape:
        raise ValueError("iterates differ in length")
    return float(np.linalg.norm(beta_new - beta_old) / max(np.linalg.norm(beta_old), 1.0))


def _inner_solve(beta, data, spec, w, options: SolverOptions, warm):
    if options.solver == "admm":
        return solve_subproblem_admm(beta, data, spec, w, options.admm, state=warm)
    return solve_subproblem_pmm_ssn(beta, data, spec, w, options.pmm_ssn, u0=warm)


def fit(data, spec: PenaltySpec, options: SolverOptions = None, beta_init=None) -> FitReport:
    """Run the reweighted outer loop and certify the result.

    Returns a report even when an inner solver fails; ``failure`` then holds
    the message and ``beta_hat`` the last accepted iterate.
    """
    options = options or SolverOptions()
    t0 = time.perf_counter()
    spec = spec.bind(data.X)
    admissible = None
    if not spec.convex:
        bound = pen.epsilon_upper_bound(data.X, spec)
        admissible = spec.epsilon < bound
        if not admissible:
            warnings.warn(f"epsilon={spec.epsilon:g} is not below the admissible bound "
                          f"{bound:g}; the support lower bound is not guaranteed",
                          RuntimeWarning, stacklevel=2)
    p = data.X.shape[1]
    beta = np.zeros(p) if beta_init is None else np.array(beta_init, dtype=float)
    track = options.track_objective
    trace = [pen.objective_F_eps(beta, data, spec)] if track else []
    inner_iters, inner_conv = [], []
    warm = None
    e2 = np.inf
    converged = False
    failure = None
    k = 0
    for k in range(1, options.max_outer_iters + 1):
        if k == 1 and options.initial_weights == "unit" and not np.any(beta):
            w = np.ones(p)
        else:
            w = pen.weights(beta, spec)
        try:
            res = _inner_solve(beta, data, spec, w, options, warm)
        except SolverFailure as exc:
            failure = str(exc)
            k -= 1
            break
        warm = res.state
        beta_new = np.where(np.abs(res.beta) < options.zero_clamp, 0.0, res.beta)
        inner_iters.append(res.iterations)
        inner_conv.append(res.converged)
        e2 = eta2(beta_new, beta)
        beta = beta_new
        if track:
            trace.append(pen.objective_F_eps(beta, data, spec))
        if not res.converged and e2 == 0.0:
            break  # the inner solver could not improve on the anchor: a stall
        if options.stop_on == "eta2":
            done = e2 <= options.outer_tol_eta2
        else:
            done = eta1(beta, data, spec) <= options.outer_tol_eta1
        if done:
            converged = True
            break
    if not track:
        trace = [pen.objective_F_eps(beta, data, spec)]
    stat = pen.stationarity_residual(beta, data, spec, tol=options.stationarity_tol)
    return FitReport(
        beta_hat=beta,
        outer_iters=k,
        inner_iters_total=int(sum(inner_iters)),
        eta1_final=eta1(beta, data, spec),
        eta2_final=float(e2),
        objective_trace=trace,
        stationarity=stat,
        wall_time=time.perf_counter() - t0,
        converged=converged and failure is None,
        solver=options.solver,
        spec=spec,
        inner_iters=inner_iters,
        inner_converged=inner_conv,
        epsilon_admissible=admissible,
        failure=failure,
    )


def fixed_point_check(beta_hat, data, spec: PenaltySpec, options: SolverOptions = None) -> bool:
    """Re-solve one subproblem anchored at ``beta_hat`` and test that it barely moves."""
    options = options or SolverOptions()
    spec = spec.bind(data.X)
    beta_hat = np.asarray(beta_hat, dtype=float)
    w = pen.weights(beta_hat, spec)
    res = _inner_solve(beta_hat, data, spec, w, options, None)
    beta_new = np.where(np.abs(res.beta) < options.zero_clamp, 0.0, res.beta)
    move = np.linalg.norm(beta_new - beta_hat)
    return bool(move <= 10.0 * options.outer_tol_eta2 * max(np.linalg.norm(beta_hat), 1.0))


def with_solver(options: SolverOptions, solver: str) -> SolverOptions:
    return replace(options, solver=solver)
