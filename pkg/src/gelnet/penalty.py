r"""The epsilon-approximation of the l_q penalty and the model objectives.

The generalized elastic-net objective is::

    F(beta) = ||X beta - y||_r + lambda2 ||beta||_2^2 + lambda1 sum_i |beta_i|^q

with ``0 < q <= 1``. For ``q < 1`` the term ``|beta_i|^q`` is replaced by
the capped variational surrogate::

    h(b) = min_{0 <= s <= u_eps} q (|b| s - (q - 1)/q * s^(q/(q-1)))
    u_eps = (eps / (p lambda1))^((q-1)/q)

whose inner minimizer ``s = min(u_eps, |b|^(q-1))`` is exactly the weight of
the reweighted l1 subproblem. ``q = 1`` is the plain elastic net: weights
are all one and ``h(b) = |b|``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.optimize import lsq_linear

from .exceptions import ConfigurationError, InputDomainError
from .prox import NormKind, project_l1_ball, project_l2_ball, project_simplex

__all__ = [
    "PenaltySpec",
    "StationarityReport",
    "u_epsilon",
    "switch_point",
    "h_eps_value",
    "h_eps_subgradient",
    "weights",
    "weight_constant",
    "epsilon_upper_bound",
    "default_epsilon",
    "lower_bound",
    "column_norms",
    "loss",
    "objective_F",
    "objective_F_eps",
    "objective_F_weighted",
    "objective_F_joint",
    "stationarity_residual",
]

#: fraction of :func:`epsilon_upper_bound` used when no epsilon is given
DEFAULT_EPSILON_FRACTION = 1e-6


@dataclass(frozen=True)
class PenaltySpec:
    """Model parameters ``(r, q, lambda1, lambda2, epsilon)``.

    ``p`` and ``epsilon`` may be left unset and filled from a design matrix
    with :meth:`bind`. ``q = 1`` selects the plain elastic net.
    """

    r: NormKind
    q: float
    lambda1: float
    lambda2: float = 0.0
    epsilon: Optional[float] = None
    p: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "r", NormKind.parse(self.r))
        if not (0.0 < self.q <= 1.0):
            raise ConfigurationError(f"q must lie in (0, 1], got {self.q}")
        if not self.lambda1 > 0:
            raise ConfigurationError(f"lambda1 must be positive, got {self.lambda1}")
        if not self.lambda2 >= 0:
            raise ConfigurationError(f"lambda2 must be nonnegative, got {self.lambda2}")
        if self.epsilon is not None and not self.epsilon > 0:
            raise ConfigurationError(f"epsilon must be positive, got {self.epsilon}")
        if self.p is not None and self.p < 1:
            raise ConfigurationError(f"p must be at least 1, got {self.p}")

    @property
    def convex(self) -> bool:
        return self.q == 1.0

    def bind(self, X, epsilon_fraction: float = DEFAULT_EPSILON_FRACTION) -> "PenaltySpec":
        """Fill ``p`` from ``X`` and, for ``q < 1``, a default admissible epsilon."""
        X = np.asarray(X)
        spec = self if self.p == X.shape[1] else replace(self, p=X.shape[1])
        if spec.epsilon is None and not spec.convex:
            spec = replace(spec, epsilon=default_epsilon(X, spec, epsilon_fraction))
        return spec


@dataclass
class StationarityReport:
    """Distance from 0 to the generalized stationarity set at ``beta``.

    ``residual_vector`` is the minimal-norm element of
    ``Diag(beta) (X^T g + 2 lambda2 beta) + lambda1 q |beta|^q`` over
    subgradients ``g`` of the loss.
    """

    residual_vector: np.ndarray
    max_abs_residual: float
    support: np.ndarray
    lower_bound_vector: np.ndarray
    bound_satisfied: bool


def _need_nonconvex(spec: PenaltySpec, what: str):
    if spec.convex:
        raise ConfigurationError(f"{what} is undefined for q = 1 (use unit weights)")


def u_epsilon(spec: PenaltySpec) -> float:
    """Weight cap ``(eps / (p lambda1))^((q-1)/q)``."""
    _need_nonconvex(spec, "u_epsilon")
    if spec.epsilon is None or spec.p is None:
        raise ConfigurationError("u_epsilon needs epsilon and p; call spec.bind(X) first")
    return (spec.epsilon / (spec.p * spec.lambda1)) ** ((spec.q - 1.0) / spec.q)


def switch_point(spec: PenaltySpec) -> float:
    """``|beta_i|`` above which the surrogate equals ``|beta_i|^q``."""
    return u_epsilon(spec) ** (1.0 / (spec.q - 1.0))


def h_eps_value(beta, spec: PenaltySpec):
    """Elementwise value of the capped surrogate of ``|beta_i|^q``."""
    b = np.abs(np.asarray(beta, dtype=float))
    if spec.convex:
        return b
    q = spec.q
    u = u_epsilon(spec)
    capped = q * u * b - (q - 1.0) * u ** (q / (q - 1.0))
    return np.where(b > switch_point(spec), b ** q, capped)


def h_eps_subgradient(beta, spec: PenaltySpec):
    """Elementwise Clarke subgradient of the surrogate, with ``sign(0) = 0``."""
    b = np.asarray(beta, dtype=float)
    s = np.sign(b)
    if spec.convex:
        return s
    q = spec.q
    u = u_epsilon(spec)
    a = np.abs(b)
    with np.errstate(divide="ignore"):
        upper = q * np.where(a > 0, a, 1.0) ** (q - 1.0) * s
    return np.where(a > switch_point(spec), upper, q * u * s)


def weights(beta, spec: PenaltySpec) -> np.ndarray:
    """Reweighting vector ``min(u_eps, |beta_i|^(q-1))``; all ones for ``q = 1``."""
    b = np.abs(np.asarray(beta, dtype=float))
    if spec.convex:
        return np.ones_like(b)
    u = u_epsilon(spec)
    out = np.full_like(b, u)
    nz = b > 0
    out[nz] = np.minimum(u, b[nz] ** (spec.q - 1.0))
    return out


def weight_constant(w, spec: PenaltySpec) -> float:
    """``(1 - q) lambda1 sum_i w_i^(q/(q-1))``: what the weighted objective omits."""
    if spec.convex:
        return 0.0
    w = np.asarray(w, dtype=float)
    q = spec.q
    return float((1.0 - q) * spec.lambda1 * np.sum(w ** (q / (q - 1.0))))


def column_norms(X, r) -> np.ndarray:
    return np.linalg.norm(np.asarray(X, dtype=float), NormKind.parse(r).order, axis=0)


def _nonzero_column_norms(X, spec):
    norms = column_norms(X, spec.r)
    if np.any(norms == 0):
        bad = np.flatnonzero(norms == 0)[:5].tolist()
        raise InputDomainError(f"design matrix has zero columns (e.g. {bad})")
    return norms


def epsilon_upper_bound(X, spec: PenaltySpec) -> float:
    """Largest admissible epsilon: ``min_i p lambda1 (||X_i||_r / (q lambda1))^(q/(q-1))``."""
    _need_nonconvex(spec, "epsilon_upper_bound")
    norms = _nonzero_column_norms(X, spec)
    p = np.asarray(X).shape[1]
    q, l1 = spec.q, spec.lambda1
    return float(np.min(p * l1 * (norms / (q * l1)) ** (q / (q - 1.0))))


def default_epsilon(X, spec: PenaltySpec, fraction: float = DEFAULT_EPSILON_FRACTION) -> float:
    return fraction * epsilon_upper_bound(X, spec)


def lower_bound(X, spec: PenaltySpec) -> np.ndarray:
    """Per-column bound ``(q lambda1 / ||X_i||_r)^(1/(1-q))`` on nonzero stationary entries."""
    _need_nonconvex(spec, "lower_bound")
    norms = _nonzero_column_norms(X, spec)
    return (spec.q * spec.lambda1 / norms) ** (1.0 / (1.0 - spec.q))


# ---------------------------------------------------------------------------
# objectives


def _check_dims(beta, data):
    beta = np.asarray(beta, dtype=float)
    X = np.asarray(data.X)
    if beta.shape != (X.shape[1],) or np.shape(data.y) != (X.shape[0],):
        raise InputDomainError(
            f"dimension mismatch: X {X.shape}, y {np.shape(data.y)}, beta {beta.shape}")
    return beta


def loss(beta, data, spec: PenaltySpec) -> float:
    beta = _check_dims(beta, data)
    return spec.r.norm(data.X @ beta - data.y)


def objective_F(beta, data, spec: PenaltySpec) -> float:
    """Exact objective with ``lambda1 ||beta||_q^q``."""
    beta = _check_dims(beta, data)
    pen = np.sum(np.abs(beta) ** spec.q) if not spec.convex else np.abs(beta).sum()
    return loss(beta, data, spec) + spec.lambda2 * float(beta @ beta) + spec.lambda1 * float(pen)


def objective_F_eps(beta, data, spec: PenaltySpec) -> float:
    """Objective with the capped surrogate (equals :func:`objective_F` for q = 1)."""
    beta = _check_dims(beta, data)
    return (loss(beta, data, spec) + spec.lambda2 * float(beta @ beta)
            + spec.lambda1 * float(np.sum(h_eps_value(beta, spec))))


def objective_F_weighted(beta, data, spec: PenaltySpec, w) -> float:
    """Reweighted convex objective ``loss + lambda2 ||beta||^2 + q lambda1 ||W beta||_1``."""
    beta = _check_dims(beta, data)
    return (loss(beta, data, spec) + spec.lambda2 * float(beta @ beta)
            + spec.q * spec.lambda1 * float(np.dot(w, np.abs(beta))))


def objective_F_joint(beta, data, spec: PenaltySpec, w) -> float:
    """``F(beta, w)``; minimizing over ``0 <= w <= u_eps`` gives ``F_eps(beta)``."""
    return objective_F_weighted(beta, data, spec, w) + weight_constant(w, spec)


# ---------------------------------------------------------------------------
# stationarity


def _min_norm_over(B, c, project, z0, iters=20000, tol=1e-15):
    """min ||B z + c||_2 over a convex set via accelerated projected gradient."""
    L = np.linalg.norm(B, 2) ** 2
    if L == 0:
        return z0
    z = project(z0)
    yk, tk = z.copy(), 1.0
    for _ in range(iters):
        grad = B.T @ (B @ yk + c)
        z_new = project(yk - grad / L)
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * tk * tk))
        yk = z_new + ((tk - 1.0) / t_new) * (z_new - z)
        step = np.linalg.norm(z_new - z)
        z, tk = z_new, t_new
        if step <= tol * (1.0 + np.linalg.norm(z)):
            break
    return z


def _loss_subgradient_fit(A, c, e, r: NormKind, tol):
    """Subgradient ``g`` of ``||.||_r`` at ``e`` minimizing ``||A g + c||``."""
    n = e.size
    scale = max(1.0, float(np.max(np.abs(e)))) if n else 1.0
    thr = tol * scale
    if r is NormKind.L2:
        nrm = np.linalg.norm(e)
        if nrm > thr:
            return e / nrm
        return _min_norm_over(A, c, lambda z: project_l2_ball(z, 1.0), np.zeros(n))
    if r is NormKind.L1:
        g = np.sign(e)
        free = np.abs(e) <= thr
        g[free] = 0.0
        if free.any():
            rhs = -(c + A @ g)
            sol = lsq_linear(A[:, free], rhs, bounds=(-1.0, 1.0), method="bvls", tol=1e-14)
            g[free] = sol.x
        return g
    emax = float(np.max(np.abs(e)))
    if emax <= thr:
        return _min_norm_over(A, c, lambda z: project_l1_ball(z, 1.0), np.zeros(n))
    J = np.flatnonzero(np.abs(e) >= emax - thr)
    s = np.sign(e[J])
    B = A[:, J] * s
    lam = _min_norm_over(B, c, project_simplex, np.full(J.size, 1.0 / J.size))
    g = np.zeros(n)
    g[J] = s * lam
    return g


def stationarity_residual(beta, data, spec: PenaltySpec, tol: float = 1e-6) -> StationarityReport:
    """Check the generalized first-order condition

        0 in Diag(beta) (d||X beta - y||_r + 2 lambda2 beta) + lambda1 q |beta|^q

    by computing the distance from 0 to the right-hand set. Residuals at or
    below ``tol * max(1, ||e||_inf)`` are treated as kinks of the loss.
    """
    beta = _check_dims(beta, data)
    X = np.asarray(data.X, dtype=float)
    e = X @ beta - data.y
    support = np.flatnonzero(beta)
    res = np.zeros_like(beta)
    if spec.convex:
        lb = np.zeros(support.size)
    else:
        lb = lower_bound(X[:, support], spec) if support.size else np.zeros(0)
    if support.size:
        bT = beta[support]
        A = bT[:, None] * X[:, support].T
        c = 2.0 * spec.lambda2 * bT ** 2 + spec.lambda1 * spec.q * np.abs(bT) ** spec.q
        g = _loss_subgradient_fit(A, c, e, spec.r, tol)
        res[support] = A @ g + c
    ok = bool(np.all(np.abs(beta[support]) > lb))
    return StationarityReport(res, float(np.max(np.abs(res))) if res.size else 0.0,
                              support, lb, ok)
