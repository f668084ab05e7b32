"""Generalized elastic-net regression with nonconvex l_q penalties.

Minimizes ``||X b - y||_r + lambda2 ||b||^2 + lambda1 ||b||_q^q`` for
``r in {1, 2, inf}`` and ``0 < q < 1`` by iteratively reweighted l1 steps,
with each weighted subproblem solved by ADMM or by a proximal
majorization-minimization scheme whose inner problems use a dual
semismooth Newton method.
"""

from .admm import AdmmOptions, solve_subproblem_admm
from .data import (
    Dataset,
    NoiseKind,
    SyntheticConfig,
    fixed_design_beta,
    generate,
    metrics,
    polynomial_expand,
    read_libsvm,
    standardize,
    write_libsvm,
)
from .driver import FitReport, SolverOptions, eta1, eta2, fit, fixed_point_check
from .exceptions import ConfigurationError, InputDomainError, LibsvmParseError, SolverFailure
from .penalty import (
    PenaltySpec,
    epsilon_upper_bound,
    lower_bound,
    objective_F,
    objective_F_eps,
    stationarity_residual,
    weights,
)
from .pmm_ssn import PmmOptions, solve_subproblem_pmm_ssn
from .prox import NormKind, WeightedL1, jacobian_prox, moreau_envelope, prox
from .runconfig import RunConfig

__version__ = "0.1.0"

__all__ = [
    "AdmmOptions", "ConfigurationError", "Dataset", "FitReport", "InputDomainError",
    "LibsvmParseError", "NoiseKind", "NormKind", "PenaltySpec", "PmmOptions", "RunConfig",
    "SolverFailure", "SolverOptions", "SyntheticConfig", "WeightedL1", "epsilon_upper_bound",
    "eta1", "eta2", "fit", "fixed_design_beta", "fixed_point_check", "generate",
    "jacobian_prox", "lower_bound", "metrics", "moreau_envelope", "objective_F",
    "objective_F_eps", "polynomial_expand", "prox", "read_libsvm", "solve_subproblem_admm",
    "solve_subproblem_pmm_ssn", "standardize", "stationarity_residual", "weights",
    "write_libsvm",
]
