r"""Proximal majorization-minimization with a dual semismooth Newton solver.

The reweighted subproblem gets a proximal term anchored at ``beta_k``::

    min_b  ||X b - y||_r + lambda2 ||b||^2 + q lambda1 ||W b||_1
           + mu/2 ||X b - X beta_k||^2

Writing ``eta = X b - y`` and dualizing the constraint gives the smooth
convex dual ``Theta(u) = <u, y> - X(u) - Y(u)`` with::

    X(u) = min_b  lambda2 ||b||^2 + <X^T u, b> + q lambda1 ||W b||_1
    Y(u) = min_eta ||eta||_r + mu/2 ||eta + y - X beta_k||^2 - <u, eta>
    grad Theta(u) = y - X b(u) + eta(u)

where ``b(u)`` and ``eta(u)`` are the prox points attaining the minima.
Newton systems use the generalized Hessian
``(2 lambda2)^-1 X U X^T + mu^-1 V + nu I`` applied matrix-free, with ``U``
the 0/1 support mask of ``b(u)`` and ``V`` a Jacobian element of the
``||.||_r`` prox.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import ConfigurationError, SolverFailure
from .linalg import conjugate_gradient
from .penalty import PenaltySpec, objective_F_weighted
from .prox import jacobian_prox, prox
from .subproblem import SubproblemResult

_ROUNDOFF = 16 * np.finfo(float).eps


@dataclass
class PmmOptions:
    """Knobs of the PMM-SSN inner solver.

    ``rho`` is accepted for parity with published parameter lists; the
    algorithm has no step that uses it.
    """

    mu: float = 1e-3
    varrho: float = 0.1
    delta: float = 0.5
    nu: float = 1e-6
    ssn_tol: float = 1e-6
    max_newton_iters: int = 2000
    cg_tol: float = 1e-2
    cg_max_iters: int = 500
    max_backtracks: int = 50
    rho: float = 0.9
    adaptive_nu: bool = True
    nu_max: float = 1e12
    nu_decrease: float = 0.1

    def __post_init__(self):
        if not self.mu > 0:
            raise ConfigurationError(f"mu must be positive, got {self.mu}")
        if not 0 < self.varrho < 0.5:
            raise ConfigurationError(f"varrho must lie in (0, 1/2), got {self.varrho}")
        if not 0 < self.delta < 1:
            raise ConfigurationError(f"delta must lie in (0, 1), got {self.delta}")
        if not self.nu > 0:
            raise ConfigurationError(f"nu must be positive, got {self.nu}")
        if not (self.ssn_tol > 0 and self.cg_tol > 0):
            raise ConfigurationError("ssn_tol and cg_tol must be positive")


@dataclass
class DualState:
    """Dual iterate with everything needed for the next Newton step."""

    u: np.ndarray
    theta_value: float
    gradient: np.ndarray
    XTu: np.ndarray = field(repr=False)
    beta: np.ndarray = field(repr=False)
    beta_active: np.ndarray = field(repr=False)
    eta_arg: np.ndarray = field(repr=False)
    eta: object = field(repr=False)
    newton_direction: Optional[np.ndarray] = None
    step_length: float = 0.0


class DualObjective:
    """``Theta``, its gradient and generalized Hessian for fixed weights and anchor."""

    def __init__(self, data, spec: PenaltySpec, w, beta_anchor, mu: float):
        if not spec.lambda2 > 0:
            raise ConfigurationError(
                "PMM-SSN needs lambda2 > 0 (the dual divides by 2*lambda2); use ADMM")
        self.X = data.X
        self.y = data.y
        self.spec = spec
        self.w = np.asarray(w, dtype=float)
        self.mu = float(mu)
        self.beta_anchor = np.asarray(beta_anchor, dtype=float)
        self.shift = self.y - self.X @ self.beta_anchor
        self.two_l2 = 2.0 * spec.lambda2
        self.pen = spec.q * spec.lambda1 * self.w

    def state(self, u, XTu=None) -> DualState:
        u = np.asarray(u, dtype=float)
        if XTu is None:
            XTu = self.X.T @ u
        z = -XTu / self.two_l2
        active = np.abs(z) > self.pen / self.two_l2
        beta = np.where(active, z - np.sign(z) * self.pen / self.two_l2, 0.0)
        eta_arg = u / self.mu - self.shift
        eta = prox(self.spec.r, eta_arg, 1.0 / self.mu)
        e = eta.point
        # the two inner minima, evaluated at their minimizers
        xval = self.spec.lambda2 * (beta @ beta) + XTu @ beta + self.pen @ np.abs(beta)
        d = e + self.shift
        yval = self.spec.r.norm(e) + 0.5 * self.mu * (d @ d) - u @ e
        value = float(u @ self.y - xval - yval)
        idx = np.flatnonzero(active)
        grad = self.y - self.X[:, idx] @ beta[idx] + e
        return DualState(u, value, grad, XTu, beta, active, eta_arg, eta)

    def value(self, u) -> float:
        return self.state(u).theta_value

    def gradient(self, u) -> np.ndarray:
        return self.state(u).gradient

    def hessian_operator(self, st: DualState, nu: float):
        """Matrix-free ``d -> (2 l2)^-1 X U X^T d + mu^-1 V d + nu d``."""
        XU = self.X[:, st.beta_active]
        V = jacobian_prox(self.spec.r, st.eta_arg, 1.0 / self.mu, result=st.eta)
        c_u, c_v = 1.0 / self.two_l2, 1.0 / self.mu

        def apply(d):
            return c_u * (XU @ (XU.T @ d)) + c_v * V.matvec(d) + nu * d

        return apply

    def hessian_dense(self, st: DualState, nu: float) -> np.ndarray:
        U = st.beta_active.astype(float)
        V = jacobian_prox(self.spec.r, st.eta_arg, 1.0 / self.mu, result=st.eta).to_dense()
        return ((self.X * U) @ self.X.T) / self.two_l2 + V / self.mu + nu * np.eye(self.y.size)

    def primal_value(self, beta) -> float:
        """``F~(beta)`` of the proximally majorized subproblem."""
        r = self.X @ (beta - self.beta_anchor)
        return self.weighted_value(beta) + 0.5 * self.mu * (r @ r)

    def state_primal_value(self, st: DualState) -> float:
        """``F~(b(u))`` from cached quantities, using ``X b(u) - y = eta(u) - grad``."""
        res = st.eta.point - st.gradient
        d = res + self.shift
        b = st.beta
        return float(self.spec.r.norm(res) + self.spec.lambda2 * (b @ b)
                     + self.pen @ np.abs(b) + 0.5 * self.mu * (d @ d))

    def weighted_value(self, beta) -> float:
        return objective_F_weighted(beta, _Data(self.X, self.y), self.spec, self.w)


@dataclass
class _Data:
    X: np.ndarray
    y: np.ndarray


def theta_value(u, beta_anchor, data, spec, w, opts: PmmOptions) -> float:
    return DualObjective(data, spec, w, beta_anchor, opts.mu).value(u)


def theta_gradient(u, beta_anchor, data, spec, w, opts: PmmOptions) -> np.ndarray:
    return DualObjective(data, spec, w, beta_anchor, opts.mu).gradient(u)


def generalized_hessian_apply(u, direction, beta_anchor, data, spec, w, opts: PmmOptions):
    dual = DualObjective(data, spec, w, beta_anchor, opts.mu)
    return dual.hessian_operator(dual.state(u), opts.nu)(np.asarray(direction, dtype=float))


def ssn_step(dual: DualObjective, st: DualState, opts: PmmOptions, info: dict = None,
             nu: Optional[float] = None) -> DualState:
    """One globalized semismooth Newton step with Armijo backtracking.

    ``nu`` overrides ``opts.nu`` as the Hessian regularizer for this step.
    """
    g = st.gradient
    gnorm = np.linalg.norm(g)
    H = dual.hessian_operator(st, opts.nu if nu is None else nu)
    rtol = min(opts.cg_tol, np.sqrt(gnorm))
    d, cg = conjugate_gradient(H, -g, rtol=rtol, maxiter=opts.cg_max_iters)
    gd = float(g @ d)
    fallback = cg.breakdown or not np.all(np.isfinite(d)) or not gd < 0
    if fallback:
        d, gd = -g, -float(g @ g)
    if info is not None:
        info.update(cg_iters=cg.iterations, cg_relres=cg.relres, fallback=fallback,
                    descent=gd, dnorm2=float(d @ d))
    XTd = dual.X.T @ d
    slack = _ROUNDOFF * (1.0 + abs(st.theta_value))
    alpha = 1.0
    for _ in range(opts.max_backtracks):
        trial = dual.state(st.u + alpha * d, st.XTu + alpha * XTd)
        if trial.theta_value <= st.theta_value + opts.varrho * alpha * gd + slack:
            trial.newton_direction = d
            trial.step_length = alpha
            return trial
        alpha *= opts.delta
    raise SolverFailure("Armijo line search failed",
                        {"theta": st.theta_value, "grad_norm": gnorm, "descent": gd})


def recover_primal(dual: DualObjective, st: DualState) -> np.ndarray:
    """Weighted-l1 prox at ``-(2 lambda2)^-1 X^T u``; its support is the mask ``U``."""
    return st.beta.copy()


def solve_subproblem_pmm_ssn(beta_anchor, data, spec: PenaltySpec, w, opts: PmmOptions = None,
                             u0=None) -> SubproblemResult:
    """Minimize the proximally majorized subproblem through its dual.

    ``u0`` warm-starts the dual (zero otherwise). Stops once
    ``||grad Theta|| <= ssn_tol * (1 + ||y||)``. When the Newton budget runs
    out first, the returned ``beta`` is the recovered primal point with the
    lowest ``F~`` seen, or the anchor if none beats it, so the outer
    objective still cannot increase. ``trace["safeguard"]`` records which.
    """
    opts = opts or PmmOptions()
    dual = DualObjective(data, spec, w, beta_anchor, opts.mu)
    n = data.y.size
    st = dual.state(np.zeros(n) if u0 is None else np.asarray(u0, dtype=float))
    tol = opts.ssn_tol * (1.0 + np.linalg.norm(data.y))
    trace = {"theta": [st.theta_value], "grad_norm": [float(np.linalg.norm(st.gradient))],
             "step": [], "cg_iters": [], "descent": []}
    converged = trace["grad_norm"][0] <= tol
    it = 0
    nu = opts.nu
    best_value, best_beta = dual.state_primal_value(st), st.beta
    while not converged and it < opts.max_newton_iters:
        info = {}
        st = ssn_step(dual, st, opts, info, nu=nu)
        it += 1
        if opts.adaptive_nu:
            # a short step means the model curvature was far too small
            nu = min(opts.nu_max, nu / st.step_length) if st.step_length < 1.0 \
                else max(opts.nu, nu * opts.nu_decrease)
        gn = float(np.linalg.norm(st.gradient))
        trace["theta"].append(st.theta_value)
        trace["grad_norm"].append(gn)
        trace["step"].append(st.step_length)
        trace["cg_iters"].append(info["cg_iters"])
        trace["descent"].append(info["descent"])
        converged = gn <= tol
        value = dual.state_primal_value(st)
        if value < best_value:
            best_value, best_beta = value, st.beta
    beta = recover_primal(dual, st)
    primal = dual.primal_value(beta)
    trace["safeguard"] = None
    if not converged:
        anchor_value = dual.primal_value(dual.beta_anchor)
        if min(best_value, primal) >= anchor_value:
            beta, primal = dual.beta_anchor.copy(), anchor_value
            trace["safeguard"] = "anchor"
        elif best_value < primal:
            beta, primal = best_beta.copy(), dual.primal_value(best_beta)
            trace["safeguard"] = "best_iterate"
    trace["duality_gap"] = [primal + st.theta_value]
    trace["primal_value"] = [primal]
    return SubproblemResult(beta, it, converged, trace, st.u.copy())
