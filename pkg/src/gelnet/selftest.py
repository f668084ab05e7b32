"""Randomized property checks for the prox maps (the ``prox-selftest`` command).

For every norm kind and for weighted l1, random ``(x, t)`` pairs are drawn
and three properties are checked:

* prox optimality: the prox point beats 100 random competitors on the
  objective ``t f(y) + ||y - x||^2 / 2``;
* Moreau decomposition: ``Prox_{tf}(x) + Pi_{t B_*}(x) = x`` up to rounding;
* nonexpansiveness: ``||Prox(x) - Prox(x')|| <= ||x - x'||``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List

import numpy as np

from .prox import NormKind, WeightedL1, project_dual_ball, prox

KINDS = ("l1", "l2", "linf", "weighted_l1")


@dataclass
class CheckResult:
    kind: str
    prop: str
    passed: bool
    worst: float
    cases: int

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.kind:<12} {self.prop:<16} worst={self.worst:.3e} cases={self.cases}"


def _draw(rng: np.random.Generator):
    dim = int(rng.integers(1, 51))
    scale = 10.0 ** rng.uniform(-2, 2)
    x = scale * rng.standard_normal(dim)
    t = 10.0 ** rng.uniform(-3, 2)
    return x, t


def _function(kind: str, dim: int, rng: np.random.Generator):
    if kind == "weighted_l1":
        w = rng.uniform(0.0, 2.0, dim)
        w[rng.random(dim) < 0.2] = 0.0
        return WeightedL1(w)
    return NormKind.parse(kind.lstrip("l"))


def _value(f, y) -> float:
    return f.norm(y)


def _dual_projection(f, x, t):
    if isinstance(f, WeightedL1):
        return np.clip(x, -t * f.weights, t * f.weights)
    return project_dual_ball(f, x, t)


def run_prox_selftest(n_pairs: int = 1000, n_competitors: int = 100, seed: int = 0,
                      kinds=KINDS) -> List[CheckResult]:
    """Run the three property checks for each kind and return one result per (kind, property)."""
    rng = np.random.default_rng(seed)
    results = []
    for kind in kinds:
        worst_opt = worst_moreau = worst_nonexp = 0.0
        for _ in range(n_pairs):
            x, t = _draw(rng)
            f = _function(kind, x.size, rng)
            p = prox(f, x, t).point

            def obj(y):
                d = y - x
                return t * _value(f, y) + 0.5 * float(d @ d)

            best = obj(p)
            scales = 10.0 ** rng.uniform(-6, 1, n_competitors)
            comps = p + scales[:, None] * (1.0 + np.abs(x).max()) * rng.standard_normal(
                (n_competitors, x.size))
            comps[0] = 0.0
            comps[1] = x
            gap = min(obj(z) for z in comps) - best
            # positive gap means the prox point wins; allow rounding only
            worst_opt = max(worst_opt, -gap / (1.0 + abs(best)))

            res = np.linalg.norm(p + _dual_projection(f, x, t) - x)
            worst_moreau = max(worst_moreau, res / (1.0 + np.linalg.norm(x)))

            x2 = x + 10.0 ** rng.uniform(-4, 1) * rng.standard_normal(x.size)
            p2 = prox(f, x2, t).point
            ratio = (np.linalg.norm(p - p2) - np.linalg.norm(x - x2)) / (1.0 + np.linalg.norm(x))
            worst_nonexp = max(worst_nonexp, ratio)
        results.append(CheckResult(kind, "optimality", worst_opt <= 1e-12, worst_opt, n_pairs))
        results.append(CheckResult(kind, "moreau_identity", worst_moreau <= 1e-12,
                                   worst_moreau, n_pairs))
        results.append(CheckResult(kind, "nonexpansive", worst_nonexp <= 1e-12,
                                   worst_nonexp, n_pairs))
    return results
