r"""Proximal mappings, ball/simplex projections and prox Jacobians.

For a closed proper convex ``f`` and ``t > 0``::

    Prox_{tf}(x) = argmin_y  f(y) + ||y - x||^2 / (2 t)
    Phi_{tf}(x)  =   min_y   f(y) + ||y - x||^2 / (2 t)

The envelope ``Phi`` is C^1 with gradient ``(x - Prox_{tf}(x)) / t``.

Norms are identified by :class:`NormKind`; a weighted l1 norm
``sum_i w_i |x_i|`` is described by :class:`WeightedL1`. For each norm the
module also returns one element of the Clarke generalized Jacobian of the
prox map, as an implicit symmetric operator with spectrum in ``[0, 1]``.

At branch boundaries (``|x_i| = t``, ``||x||_2 = t``, ``||x||_1 = t``) the
closed branch is taken: the prox shrinks to zero and the Jacobian element
is the zero branch.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .exceptions import InputDomainError

__all__ = [
    "NormKind",
    "WeightedL1",
    "ProxResult",
    "JacobianElement",
    "DiagonalJacobian",
    "RadialJacobian",
    "SimplexJacobian",
    "prox_l1",
    "prox_l2",
    "prox_linf",
    "prox_weighted_l1",
    "prox",
    "project_simplex",
    "project_l1_ball",
    "project_l2_ball",
    "project_linf_ball",
    "project_dual_ball",
    "moreau_envelope",
    "jacobian_prox",
    "moreau_identity_check",
]


class NormKind(enum.Enum):
    """Loss norm ``||.||_r`` with ``r`` in {1, 2, inf}."""

    L1 = "1"
    L2 = "2"
    LINF = "inf"

    @classmethod
    def parse(cls, value) -> "NormKind":
        """Accept a NormKind, 1, 2, ``"inf"``, ``np.inf`` or their strings."""
        if isinstance(value, cls):
            return value
        if isinstance(value, (int, float, np.integer, np.floating)):
            if np.isinf(value) and value > 0:
                return cls.LINF
            if value == 1:
                return cls.L1
            if value == 2:
                return cls.L2
        if isinstance(value, str):
            key = value.strip().lower().lstrip("l").replace("_", "")
            aliases = {"1": cls.L1, "2": cls.L2, "inf": cls.LINF,
                       "infinity": cls.LINF, "oo": cls.LINF}
            if key in aliases:
                return aliases[key]
        raise InputDomainError(f"unsupported norm {value!r}; expected 1, 2 or inf")

    @property
    def order(self) -> float:
        return {NormKind.L1: 1, NormKind.L2: 2, NormKind.LINF: np.inf}[self]

    def norm(self, x) -> float:
        return float(np.linalg.norm(np.ravel(x), self.order))

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class WeightedL1:
    """The weighted l1 norm ``sum_i weights_i * |x_i|``."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise InputDomainError("weights must be finite and nonnegative")
        object.__setattr__(self, "weights", w)

    def norm(self, x) -> float:
        return float(np.dot(self.weights, np.abs(x)))


FunctionKind = Union[NormKind, WeightedL1]


@dataclass
class ProxResult:
    """Output of a prox evaluation.

    ``active`` marks the coordinates on the nonzero branch of the map
    (those that influence the Jacobian element). For the l2 prox it is
    all-True or all-False; for the linf prox it is the support of the
    l1-ball projection, or all-False when the prox returns 0.
    """

    point: np.ndarray
    active: np.ndarray
    signs: np.ndarray = field(default=None)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.point, dtype=dtype)


def _as_vector(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        x = x.ravel()
    if not np.all(np.isfinite(x)):
        raise InputDomainError("input vector contains non-finite entries")
    return x


def _check_t(t) -> float:
    t = float(t)
    if not (t > 0 and np.isfinite(t)):
        raise InputDomainError(f"prox parameter t must be positive and finite, got {t}")
    return t


# ---------------------------------------------------------------------------
# projections


def project_simplex(x) -> np.ndarray:
    """Euclidean projection onto ``{z : z >= 0, sum(z) = 1}``.

    Sort-based pivot search, O(n log n).
    """
    x = _as_vector(x)
    if x.size == 0:
        raise InputDomainError("cannot project an empty vector onto the simplex")
    u = np.sort(x)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, x.size + 1)
    rho = np.nonzero(u - css / ind > 0)[0][-1]
    theta = css[rho] / (rho + 1)
    return np.maximum(x - theta, 0.0)


def _l1_ball_threshold(a: np.ndarray, t: float) -> float:
    # a >= 0 with sum(a) > t; returns theta with sum(max(a - theta, 0)) = t
    u = np.sort(a)[::-1]
    css = np.cumsum(u) - t
    ind = np.arange(1, a.size + 1)
    rho = np.nonzero(u - css / ind > 0)[0][-1]
    return css[rho] / (rho + 1)


def project_l1_ball(x, t) -> np.ndarray:
    """Euclidean projection onto ``{z : ||z||_1 <= t}``.

    Points inside the ball are returned unchanged. Otherwise the signs are
    folded out and ``t * Pi_simplex(|x| / t)`` is mapped back.
    """
    x = _as_vector(x)
    t = _check_t(t)
    a = np.abs(x)
    if a.sum() <= t:
        return x.copy()
    return np.sign(x) * t * project_simplex(a / t)


def project_l2_ball(x, t) -> np.ndarray:
    x = _as_vector(x)
    t = _check_t(t)
    nrm = np.linalg.norm(x)
    if nrm <= t:
        return x.copy()
    return (t / nrm) * x


def project_linf_ball(x, t) -> np.ndarray:
    x = _as_vector(x)
    t = _check_t(t)
    return np.clip(x, -t, t)


def project_dual_ball(kind: NormKind, x, t) -> np.ndarray:
    """Projection onto the dual-norm ball of radius ``t`` (the conjugate prox)."""
    kind = NormKind.parse(kind)
    if kind is NormKind.L1:
        return project_linf_ball(x, t)
    if kind is NormKind.L2:
        return project_l2_ball(x, t)
    return project_l1_ball(x, t)


# ---------------------------------------------------------------------------
# prox maps


def prox_l1(x, t) -> ProxResult:
    """Soft thresholding: ``sign(x) * max(|x| - t, 0)``."""
    x = _as_vector(x)
    t = _check_t(t)
    active = np.abs(x) > t
    point = np.where(active, x - np.sign(x) * t, 0.0)
    return ProxResult(point, active)


def prox_weighted_l1(x, weights, t) -> ProxResult:
    """Soft thresholding with per-coordinate levels ``t * weights``."""
    x = _as_vector(x)
    t = _check_t(t)
    w = np.asarray(weights, dtype=float)
    if w.shape != x.shape:
        raise InputDomainError(f"weights shape {w.shape} does not match x shape {x.shape}")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise InputDomainError("weights must be finite and nonnegative")
    level = t * w
    active = np.abs(x) > level
    point = np.where(active, x - np.sign(x) * level, 0.0)
    return ProxResult(point, active)


def prox_l2(x, t) -> ProxResult:
    """Block soft thresholding ``max(1 - t / ||x||_2, 0) * x``."""
    x = _as_vector(x)
    t = _check_t(t)
    nrm = np.linalg.norm(x)
    if nrm <= t:
        return ProxResult(np.zeros_like(x), np.zeros(x.shape, dtype=bool))
    return ProxResult((1.0 - t / nrm) * x, np.ones(x.shape, dtype=bool))


def prox_linf(x, t) -> ProxResult:
    """Prox of ``t * ||.||_inf`` via the Moreau decomposition ``x - Pi_{B_1^t}(x)``."""
    x = _as_vector(x)
    t = _check_t(t)
    a = np.abs(x)
    if a.sum() <= t:
        return ProxResult(np.zeros_like(x), np.zeros(x.shape, dtype=bool))
    theta = _l1_ball_threshold(a, t)
    active = a > theta
    proj = np.sign(x) * np.maximum(a - theta, 0.0)
    return ProxResult(x - proj, active, np.sign(x))


def prox(kind: FunctionKind, x, t) -> ProxResult:
    """Dispatch to the prox of ``t * f`` for a norm kind or weighted l1."""
    if isinstance(kind, WeightedL1):
        return prox_weighted_l1(x, kind.weights, t)
    kind = NormKind.parse(kind)
    if kind is NormKind.L1:
        return prox_l1(x, t)
    if kind is NormKind.L2:
        return prox_l2(x, t)
    return prox_linf(x, t)


def _fvalue(kind: FunctionKind, x) -> float:
    if isinstance(kind, WeightedL1):
        return kind.norm(x)
    return NormKind.parse(kind).norm(x)


def moreau_envelope(kind: FunctionKind, x, t):
    """Return ``(Phi_{tf}(x), grad Phi_{tf}(x))``."""
    x = _as_vector(x)
    t = _check_t(t)
    p = prox(kind, x, t).point
    diff = x - p
    value = _fvalue(kind, p) + float(diff @ diff) / (2.0 * t)
    return value, diff / t


# ---------------------------------------------------------------------------
# generalized Jacobian elements


class JacobianElement:
    """Implicit symmetric PSD operator with spectrum in [0, 1]."""

    size: int

    def matvec(self, d: np.ndarray) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def to_dense(self) -> np.ndarray:
        return np.column_stack([self.matvec(e) for e in np.eye(self.size)])

    def __matmul__(self, d):
        return self.matvec(np.asarray(d, dtype=float))


@dataclass
class DiagonalJacobian(JacobianElement):
    """``diag(mask)`` with a 0/1 mask."""

    mask: np.ndarray

    @property
    def size(self):
        return self.mask.size

    def matvec(self, d):
        return np.where(self.mask, d, 0.0)

    def to_dense(self):
        return np.diag(self.mask.astype(float))


@dataclass
class RadialJacobian(JacobianElement):
    """``a * I + b * v v^T`` with ``v`` a unit vector."""

    a: float
    b: float
    v: np.ndarray

    @property
    def size(self):
        return self.v.size

    def matvec(self, d):
        return self.a * d + self.b * (self.v @ d) * self.v

    def to_dense(self):
        return self.a * np.eye(self.size) + self.b * np.outer(self.v, self.v)


@dataclass
class SimplexJacobian(JacobianElement):
    """``I - S_A (I_A - 1_A 1_A^T / |A|) S_A`` for the linf prox.

    ``S_A`` is the sign pattern restricted to the active set ``A`` of the
    l1-ball projection. Never materialized in the solver path.
    """

    signs: np.ndarray
    active: np.ndarray

    @property
    def size(self):
        return self.signs.size

    def matvec(self, d):
        s = np.where(self.active, self.signs, 0.0)
        k = np.count_nonzero(self.active)
        out = np.where(self.active, 0.0, d)
        if k:
            out = out + s * ((s @ d) / k)
        return out


def jacobian_prox(kind: FunctionKind, x, t, result: ProxResult = None) -> JacobianElement:
    """One Clarke generalized Jacobian element of ``Prox_{tf}`` at ``x``.

    ``result`` may pass a prox already evaluated at the same ``(x, t)``.
    """
    x = _as_vector(x)
    t = _check_t(t)
    if result is None:
        result = prox(kind, x, t)
    if isinstance(kind, WeightedL1):
        return DiagonalJacobian(result.active)
    kind = NormKind.parse(kind)
    if kind is NormKind.L1:
        return DiagonalJacobian(result.active)
    if kind is NormKind.L2:
        if not result.active.any():
            return RadialJacobian(0.0, 0.0, np.zeros_like(x))
        nrm = np.linalg.norm(x)
        return RadialJacobian(1.0 - t / nrm, t / nrm, x / nrm)
    if not result.active.any():
        return DiagonalJacobian(np.zeros(x.shape, dtype=bool))
    return SimplexJacobian(result.signs, result.active)


def moreau_identity_check(kind: NormKind, x, t) -> float:
    """``||Prox_{t||.||}(x) + Pi_{dual ball, t}(x) - x||_2`` (zero up to rounding)."""
    x = _as_vector(x)
    p = prox(kind, x, t).point
    return float(np.linalg.norm(p + project_dual_ball(kind, x, t) - x))
