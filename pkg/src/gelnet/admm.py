r"""ADMM for the reweighted subproblem.

The subproblem ``min ||X b - y||_r + lambda2 ||b||^2 + q lambda1 ||W b||_1`` is
split with ``eta = X b - y`` and ``theta = W b``. One sweep is

1. solve ``(2 lambda2 I + sigma X^T X + sigma W^2) b
   = sigma X^T (y + eta - u / sigma) + sigma W (theta - v / sigma)``
2. ``eta   = Prox_{||.||_r / sigma}(X b - y + u / sigma)``
3. ``theta = Prox_{q lambda1 ||.||_1 / sigma}(W b + v / sigma)``
4. ``u += tau sigma (X b - eta - y)``, ``v += tau sigma (W b - theta)``

The coefficient matrix only changes with the weights, so its factorization
is built once per subproblem and reused by every sweep.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import ConfigurationError
from .linalg import RidgeWeightedSystem
from .penalty import PenaltySpec
from .prox import prox, prox_l1
from .subproblem import SubproblemResult

GOLDEN = (1.0 + np.sqrt(5.0)) / 2.0


@dataclass
class AdmmOptions:
    sigma: float = 1e-3
    tau: float = 1.618
    max_inner_iters: int = 2000
    inner_tol: float = 1e-6
    linear_solver: str = "cholesky_smw"

    def __post_init__(self):
        if not self.sigma > 0:
            raise ConfigurationError(f"sigma must be positive, got {self.sigma}")
        if not 0 < self.tau < GOLDEN:
            raise ConfigurationError(f"tau must lie in (0, (1+sqrt 5)/2), got {self.tau}")
        if self.max_inner_iters < 1 or not self.inner_tol > 0:
            raise ConfigurationError("max_inner_iters must be >= 1 and inner_tol > 0")
        if self.linear_solver not in ("cholesky_smw", "cg"):
            raise ConfigurationError(f"unknown linear_solver {self.linear_solver!r}")


@dataclass
class AdmmState:
    beta: np.ndarray
    eta: np.ndarray
    theta: np.ndarray
    u: np.ndarray
    v: np.ndarray
    primal_residuals: tuple = (0.0, 0.0)

    @classmethod
    def initial(cls, beta, data, w, u=None, v=None, eta=None):
        """Feasible start at ``beta``; multipliers default to zero."""
        beta = np.asarray(beta, dtype=float).copy()
        n = data.y.size
        return cls(
            beta=beta,
            eta=data.X @ beta - data.y if eta is None else np.array(eta, dtype=float),
            theta=w * beta,
            u=np.zeros(n) if u is None else np.array(u, dtype=float),
            v=np.zeros(beta.size) if v is None else np.array(v, dtype=float),
        )


def beta_system(data, spec: PenaltySpec, w, opts: AdmmOptions) -> RidgeWeightedSystem:
    diag = 2.0 * spec.lambda2 + opts.sigma * np.asarray(w, dtype=float) ** 2
    return RidgeWeightedSystem(data.X, diag, opts.sigma, method=opts.linear_solver,
                               cg_tol=min(opts.inner_tol, 1e-10))


def beta_rhs(state: AdmmState, data, w, opts: AdmmOptions):
    s = opts.sigma
    return data.X.T @ (s * (data.y + state.eta) - state.u) + w * (s * state.theta - state.v)


def beta_step(state: AdmmState, data, spec: PenaltySpec, w, opts: AdmmOptions,
              system: Optional[RidgeWeightedSystem] = None):
    """Step 1: the ridge-type linear system for beta."""
    if system is None:
        system = beta_system(data, spec, w, opts)
    return system.solve(beta_rhs(state, data, w, opts))


def eta_step(state: AdmmState, data, spec: PenaltySpec, opts: AdmmOptions, Xbeta=None):
    """Step 2: prox of the loss norm at ``X beta - y + u / sigma``."""
    if Xbeta is None:
        Xbeta = data.X @ state.beta
    arg = Xbeta - data.y + state.u / opts.sigma
    return prox(spec.r, arg, 1.0 / opts.sigma).point


def theta_step(state: AdmmState, data, spec: PenaltySpec, w, opts: AdmmOptions):
    """Step 3: soft threshold of ``W beta + v / sigma`` at ``q lambda1 / sigma``."""
    arg = w * state.beta + state.v / opts.sigma
    return prox_l1(arg, spec.q * spec.lambda1 / opts.sigma).point


def multiplier_step(state: AdmmState, data, w, opts: AdmmOptions, Xbeta=None):
    """Step 4: returns updated ``(u, v)``."""
    if Xbeta is None:
        Xbeta = data.X @ state.beta
    step = opts.tau * opts.sigma
    u = state.u + step * (Xbeta - state.eta - data.y)
    v = state.v + step * (w * state.beta - state.theta)
    return u, v


def _sparse_beta(state: AdmmState):
    # theta is the soft-thresholded copy of W beta; take its zero pattern
    return np.where(state.theta != 0.0, state.beta, 0.0)


def solve_subproblem_admm(beta_init, data, spec: PenaltySpec, w, opts: AdmmOptions = None,
                          state: Optional[AdmmState] = None) -> SubproblemResult:
    """Run ADMM sweeps until the scaled primal residual drops below ``inner_tol``.

    ``state`` warm-starts ``(eta, u, v)``; ``theta`` is always reset to
    ``W beta_init``. The returned ``beta`` is zeroed wherever ``theta`` is zero.
    """
    opts = opts or AdmmOptions()
    w = np.asarray(w, dtype=float)
    if state is None:
        state = AdmmState.initial(beta_init, data, w)
    else:
        state = AdmmState.initial(beta_init, data, w, u=state.u, v=state.v, eta=state.eta)
    system = beta_system(data, spec, w, opts)
    ynorm = 1.0 + np.linalg.norm(data.y)
    trace = {"primal_eta": [], "primal_theta": [], "dual": []}
    converged = False
    it = 0
    for it in range(1, opts.max_inner_iters + 1):
        eta_old, theta_old = state.eta, state.theta
        state.beta = beta_step(state, data, spec, w, opts, system)
        Xb = data.X @ state.beta
        state.eta = eta_step(state, data, spec, opts, Xb)
        state.theta = theta_step(state, data, spec, w, opts)
        state.u, state.v = multiplier_step(state, data, w, opts, Xb)
        r1 = np.linalg.norm(Xb - state.eta - data.y)
        r2 = np.linalg.norm(w * state.beta - state.theta)
        state.primal_residuals = (r1, r2)
        dual = opts.sigma * np.linalg.norm(
            data.X.T @ (state.eta - eta_old) + w * (state.theta - theta_old))
        trace["primal_eta"].append(r1)
        trace["primal_theta"].append(r2)
        trace["dual"].append(dual)
        if max(r1, r2) / ynorm <= opts.inner_tol:
            converged = True
            break
    return SubproblemResult(_sparse_beta(state), it, converged, trace, state)
