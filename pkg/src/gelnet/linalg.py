"""Linear solvers shared by the inner solvers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .exceptions import SolverFailure


@dataclass
class CGInfo:
    iterations: int
    converged: bool
    breakdown: bool
    relres: float


def conjugate_gradient(matvec, b, rtol=1e-10, maxiter=None, x0=None):
    """Plain CG for a symmetric positive definite operator.

    Stops when ``||b - A x|| <= rtol * ||b||``. ``breakdown`` is set when a
    search direction with nonpositive curvature shows up.
    """
    b = np.asarray(b, dtype=float)
    n = b.size
    maxiter = 2 * n + 10 if maxiter is None else maxiter
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    r = b - matvec(x) if x0 is not None else b.copy()
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return np.zeros(n), CGInfo(0, True, False, 0.0)
    target = rtol * bnorm
    rr = r @ r
    if np.sqrt(rr) <= target:
        return x, CGInfo(0, True, False, np.sqrt(rr) / bnorm)
    d = r.copy()
    for it in range(1, maxiter + 1):
        Ad = matvec(d)
        dAd = d @ Ad
        if not dAd > 0:
            return x, CGInfo(it, False, True, np.sqrt(rr) / bnorm)
        a = rr / dAd
        x += a * d
        r -= a * Ad
        rr_new = r @ r
        if np.sqrt(rr_new) <= target:
            return x, CGInfo(it, True, False, np.sqrt(rr_new) / bnorm)
        d = r + (rr_new / rr) * d
        rr = rr_new
    return x, CGInfo(maxiter, False, False, np.sqrt(rr) / bnorm)


class RidgeWeightedSystem:
    r"""Solver for ``(diag(D) + sigma X^T X) beta = rhs`` with ``D > 0``.

    With ``p > n`` the Sherman-Morrison-Woodbury identity is used::

        A^{-1} = D^{-1} - D^{-1} X^T (sigma^{-1} I_n + X D^{-1} X^T)^{-1} X D^{-1}

    so only an ``n x n`` Cholesky factor is formed, once per instance.
    Otherwise ``A`` itself is factored. ``method="cg"`` skips factoring.
    """

    def __init__(self, X, diag, sigma, method="cholesky_smw", cg_tol=1e-10, cg_maxiter=None):
        self.X = X
        self.diag = np.asarray(diag, dtype=float)
        self.sigma = float(sigma)
        self.method = method
        self.cg_tol = cg_tol
        self.cg_maxiter = cg_maxiter
        if np.any(self.diag <= 0):
            raise SolverFailure("beta-system diagonal is not positive",
                                {"min_diag": float(self.diag.min())})
        n, p = X.shape
        self.smw = method == "cholesky_smw" and p > n
        if method == "cholesky_smw":
            try:
                if self.smw:
                    M = (X / self.diag) @ X.T
                    M[np.diag_indices_from(M)] += 1.0 / self.sigma
                else:
                    M = self.sigma * (X.T @ X)
                    M[np.diag_indices_from(M)] += self.diag
                self._factor = cho_factor(M, lower=True)
            except np.linalg.LinAlgError as exc:
                raise SolverFailure(f"beta-system factorization failed: {exc}") from exc
        elif method != "cg":
            raise ValueError(f"unknown linear solver {method!r}")

    def matvec(self, beta):
        return self.diag * beta + self.sigma * (self.X.T @ (self.X @ beta))

    def solve(self, rhs):
        if self.method == "cg":
            x, info = conjugate_gradient(self.matvec, rhs, rtol=self.cg_tol,
                                         maxiter=self.cg_maxiter)
            if info.breakdown:
                raise SolverFailure("CG breakdown in beta-step", vars(info))
            return x
        if not self.smw:
            return cho_solve(self._factor, rhs)
        Dinv_rhs = rhs / self.diag
        tmp = cho_solve(self._factor, self.X @ Dinv_rhs)
        return Dinv_rhs - (self.X.T @ tmp) / self.diag
