"""
Shrinking the proximal weight
=============================

The PMM subproblem adds mu/2 ||X (b - anchor)||^2 to the weighted model.
As mu goes to zero its optimal value approaches the unmodified one, here
computed by a tightly converged ADMM run. The gap shrinks linearly in mu.
"""

import numpy as np

from gelnet import AdmmOptions, Dataset, PenaltySpec, PmmOptions
from gelnet import solve_subproblem_admm, solve_subproblem_pmm_ssn
from gelnet.penalty import objective_F_weighted

rng = np.random.default_rng(0)
X, y = rng.normal(size=(5, 6)), rng.normal(size=5)
w = rng.uniform(0.5, 2.0, 6)
data = Dataset(X, y)

for r in ("1", "2", "inf"):
    spec = PenaltySpec(r, 0.5, 0.3, 0.1)
    ref = solve_subproblem_admm(np.zeros(6), data, spec, w,
                                AdmmOptions(sigma=1.0, inner_tol=1e-12, max_inner_iters=200_000))
    target = objective_F_weighted(ref.beta, data, spec, w)
    print(f"r={r}: value at mu = 0 is {target:.10f}")
    for mu in (1e-2, 1e-4, 1e-6):
        res = solve_subproblem_pmm_ssn(np.zeros(6), data, spec, w,
                                       PmmOptions(mu=mu, ssn_tol=1e-10, max_newton_iters=5000))
        value = res.trace["primal_value"][0]
        print(f"   mu={mu:.0e}  value={value:.10f}  gap={abs(value - target):.1e}  "
              f"Newton steps={res.iterations}")
