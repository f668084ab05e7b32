"""Synthetic designs, LIBSVM ingestion, polynomial features and error metrics."""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .exceptions import ConfigurationError, LibsvmParseError

__all__ = [
    "NoiseKind",
    "SyntheticConfig",
    "Dataset",
    "MetricSet",
    "FIXED_DESIGN_COEFFICIENTS",
    "fixed_design_beta",
    "ar1_design",
    "noise_sample",
    "generate",
    "read_libsvm",
    "write_libsvm",
    "polynomial_expand",
    "polynomial_column_count",
    "standardize",
    "metrics",
]


class NoiseKind(enum.Enum):
    LOGNORMAL = "LN"
    GAUSSIAN = "GN"
    UNIFORM = "UN"

    @classmethod
    def parse(cls, value) -> "NoiseKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().upper()
        aliases = {"LN": cls.LOGNORMAL, "LOGNORMAL": cls.LOGNORMAL,
                   "GN": cls.GAUSSIAN, "GAUSSIAN": cls.GAUSSIAN,
                   "UN": cls.UNIFORM, "UNIFORM": cls.UNIFORM}
        if key not in aliases:
            raise ConfigurationError(f"unknown noise kind {value!r}")
        return aliases[key]


# 1-based positions and values of the planted coefficients in the fixed test
FIXED_DESIGN_COEFFICIENTS = {
    30: -5.0, 198: 2.0, 269: -3.0, 395: -2.0, 442: 4.0,
    495: -4.0, 637: 1.0, 776: 5.0, 777: -1.0, 865: 3.0,
}


def fixed_design_beta(p: int = 1000) -> np.ndarray:
    """The ten-sparse coefficient vector of the fixed-design experiment."""
    if p < max(FIXED_DESIGN_COEFFICIENTS):
        raise ConfigurationError(f"fixed design needs p >= {max(FIXED_DESIGN_COEFFICIENTS)}")
    beta = np.zeros(p)
    for pos, val in FIXED_DESIGN_COEFFICIENTS.items():
        beta[pos - 1] = val
    return beta


@dataclass
class SyntheticConfig:
    """Parameters of a synthetic regression instance.

    ``R`` is the ratio of the largest to the smallest planted magnitude
    (the smallest is 1). ``beta`` overrides the random planted vector, as
    in the fixed-design experiment.
    """

    n: int = 300
    p: int = 1000
    kappa: float = 0.2
    K: int = 10
    R: float = 100.0
    noise_kind: NoiseKind = NoiseKind.GAUSSIAN
    alpha: float = 1e-3
    seed: int = 0
    positive_only: bool = False
    beta: Optional[Sequence[float]] = None

    def __post_init__(self):
        self.noise_kind = NoiseKind.parse(self.noise_kind)
        if self.n < 1 or self.p < 1:
            raise ConfigurationError("n and p must be positive")
        if not 0.0 <= self.kappa < 1.0:
            raise ConfigurationError(f"kappa must lie in [0, 1), got {self.kappa}")
        if self.beta is None:
            if not 0 < self.K < self.n:
                raise ConfigurationError(f"need 0 < K < n, got K={self.K}, n={self.n}")
            if self.K > self.p:
                raise ConfigurationError("K cannot exceed p")
            if self.R < 1.0:
                raise ConfigurationError(f"R must be >= 1, got {self.R}")
        elif len(self.beta) != self.p:
            raise ConfigurationError("explicit beta must have length p")
        if self.alpha < 0:
            raise ConfigurationError("alpha must be nonnegative")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["noise_kind"] = self.noise_kind.value
        if self.beta is not None:
            d["beta"] = [float(b) for b in self.beta]
        return d


@dataclass
class Dataset:
    """Design matrix, response and (when known) the planted coefficients."""

    X: np.ndarray
    y: np.ndarray
    beta_true: Optional[np.ndarray] = None
    provenance: object = None
    noise: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float).ravel()
        if self.X.ndim != 2 or self.X.shape[0] != self.y.size:
            raise ConfigurationError(f"X {self.X.shape} and y {self.y.shape} do not agree")
        if self.beta_true is not None:
            self.beta_true = np.asarray(self.beta_true, dtype=float)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


def ar1_design(n: int, p: int, kappa: float, rng: np.random.Generator) -> np.ndarray:
    """Rows i.i.d. N(0, Sigma) with ``Sigma_ij = kappa^|i-j|`` via the AR(1) recursion."""
    Z = rng.standard_normal((n, p))
    if kappa == 0.0:
        return Z
    X = np.empty_like(Z)
    X[:, 0] = Z[:, 0]
    c = math.sqrt(1.0 - kappa * kappa)
    for j in range(1, p):
        X[:, j] = kappa * X[:, j - 1] + c * Z[:, j]
    return X


def noise_sample(kind, n: int, seed=None, rng: np.random.Generator = None) -> np.ndarray:
    """Zero-mean noise: standard normal, U[-1, 1], or exp(N(0,1)) - e^(1/2)."""
    kind = NoiseKind.parse(kind)
    if rng is None:
        rng = np.random.default_rng(seed)
    if kind is NoiseKind.GAUSSIAN:
        return rng.standard_normal(n)
    if kind is NoiseKind.UNIFORM:
        return rng.uniform(-1.0, 1.0, n)
    return np.exp(rng.standard_normal(n)) - math.exp(0.5)


def generate(config: SyntheticConfig) -> Dataset:
    """Draw ``(X, y = X beta* + alpha * noise)`` reproducibly from ``config.seed``."""
    rng = np.random.default_rng(config.seed)
    X = ar1_design(config.n, config.p, config.kappa, rng)
    if config.beta is not None:
        beta = np.asarray(config.beta, dtype=float).copy()
    else:
        beta = np.zeros(config.p)
        support = rng.choice(config.p, size=config.K, replace=False)
        mags = rng.uniform(1.0, config.R, size=config.K)
        signs = np.ones(config.K) if config.positive_only else rng.choice([-1.0, 1.0], config.K)
        beta[support] = signs * mags
    eps = noise_sample(config.noise_kind, config.n, rng=rng)
    y = X @ beta + config.alpha * eps
    return Dataset(X, y, beta, provenance=config, noise=eps)


# ---------------------------------------------------------------------------
# LIBSVM text format


def read_libsvm(path, n_features: Optional[int] = None) -> Dataset:
    """Parse ``label idx:val idx:val ...`` lines (1-based indices) into dense arrays."""
    labels, rows = [], []
    max_idx = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            try:
                labels.append(float(parts[0]))
            except ValueError:
                raise LibsvmParseError(f"bad label {parts[0]!r}", lineno) from None
            entries = {}
            for tok in parts[1:]:
                idx, sep, val = tok.partition(":")
                if not sep:
                    raise LibsvmParseError(f"expected index:value, got {tok!r}", lineno)
                try:
                    j, v = int(idx), float(val)
                except ValueError:
                    raise LibsvmParseError(f"bad pair {tok!r}", lineno) from None
                if j < 1:
                    raise LibsvmParseError(f"feature index must be >= 1, got {j}", lineno)
                entries[j] = v
                max_idx = max(max_idx, j)
            rows.append(entries)
    p = n_features if n_features is not None else max_idx
    X = np.zeros((len(rows), p))
    for i, entries in enumerate(rows):
        for j, v in entries.items():
            if j > p:
                raise LibsvmParseError(f"feature index {j} exceeds n_features={p}", i + 1)
            X[i, j - 1] = v
    return Dataset(X, np.array(labels), provenance=str(path))


def write_libsvm(path, X, y) -> None:
    X = np.asarray(X, dtype=float)
    with open(path, "w", encoding="utf-8") as fh:
        for label, row in zip(np.asarray(y, dtype=float), X):
            pairs = " ".join(f"{j + 1}:{float(row[j])!r}" for j in np.flatnonzero(row))
            fh.write(f"{float(label)!r} {pairs}".rstrip() + "\n")


def polynomial_column_count(p: int, degree: int, include_bias: bool = False) -> int:
    return math.comb(p + degree, degree) - (0 if include_bias else 1)


def polynomial_expand(X, degree: int, max_columns: int = 200_000,
                      include_bias: bool = False) -> np.ndarray:
    """All monomials of total degree 1..degree, graded then lexicographic.

    For ``p = 2, degree = 2`` the columns are ``x1, x2, x1^2, x1 x2, x2^2``.
    ``include_bias`` prepends the constant (degree 0) column.
    """
    X = np.asarray(X, dtype=float)
    if degree < 1:
        raise ConfigurationError(f"degree must be >= 1, got {degree}")
    p = X.shape[1]
    count = polynomial_column_count(p, degree, include_bias)
    if count > max_columns:
        raise MemoryError(f"expansion would create {count} columns (cap {max_columns})")
    cols = [np.ones(X.shape[0])] if include_bias else []
    for d in range(1, degree + 1):
        for combo in itertools.combinations_with_replacement(range(p), d):
            cols.append(np.prod(X[:, combo], axis=1))
    return np.column_stack(cols) if cols else np.zeros((X.shape[0], 0))


def standardize(X, y=None, center: bool = True, unit_norm: bool = True):
    """Center columns (and ``y``) and scale columns to unit l2 norm.

    Zero columns are left at zero. Returns ``(X, y)`` or ``X`` when ``y`` is None.
    """
    X = np.array(X, dtype=float)
    if center:
        X -= X.mean(axis=0)
    if unit_norm:
        norms = np.linalg.norm(X, axis=0)
        X /= np.where(norms > 0, norms, 1.0)
    if y is None:
        return X
    y = np.array(y, dtype=float)
    if center:
        y -= y.mean()
    return X, y


# ---------------------------------------------------------------------------
# metrics


@dataclass
class MetricSet:
    """Trial averages: relative error, unsquared per-dimension error, zero-position SD."""

    re: Optional[float]
    mse: Optional[float]
    sd: float
    n_trials: int


def metrics(fits, N: Optional[int] = None, conventional_mse: bool = False) -> MetricSet:
    """Average RE/MSE/SD over ``fits``, a list of ``(beta_hat, beta_true, p)``.

    RE is ``||b - b*|| / ||b*||`` and MSE is ``||b - b*|| / p`` averaged over
    trials (``||b - b*||^2 / p`` with ``conventional_mse``). SD is the standard
    deviation of the estimates at true-zero positions, averaged over trials.
    """
    fits = list(fits)
    N = len(fits) if N is None else N
    if N != len(fits) or N < 1:
        raise ConfigurationError(f"expected {N} completed fits, got {len(fits)}")
    if any(bt is None for _, bt, _ in fits):
        sds = [float(np.std(np.asarray(bh))) for bh, _, _ in fits]
        return MetricSet(None, None, float(np.mean(sds)), N)
    re, mse, sd = [], [], []
    for beta_hat, beta_true, p in fits:
        bh, bt = np.asarray(beta_hat, float), np.asarray(beta_true, float)
        err = np.linalg.norm(bh - bt)
        re.append(err / np.linalg.norm(bt) if np.any(bt) else err)
        mse.append((err ** 2 if conventional_mse else err) / p)
        zeros = bt == 0
        sd.append(float(np.std(bh[zeros])) if zeros.any() else 0.0)
    return MetricSet(float(np.mean(re)), float(np.mean(mse)), float(np.mean(sd)), N)
