"""The m-dimensional Gaussian copula."""
import numpy as np
from scipy import linalg

from .corr_param import check_correlation
from .special import bvn_cdf, norm_cdf, norm_ppf, norm_scores


class GaussianCopula:
    """Gaussian copula with correlation matrix ``corr``.

    The Cholesky factor is computed once at construction; every density
    evaluation goes through it (log-determinant and a triangular solve).
    ``check=False`` skips validation for matrices that are correlation
    matrices by construction; the factorisation still fails on non-PD input.
    """

    def __init__(self, corr, check=True):
        self.corr = check_correlation(corr) if check else np.asarray(corr, dtype=float)
        self.dim = self.corr.shape[0]
        self.chol = np.linalg.cholesky(self.corr)
        self.logdet = 2.0 * np.sum(np.log(np.diag(self.chol)))

    def __repr__(self):
        return f"GaussianCopula(dim={self.dim})"

    def log_density_scores(self, x):
        """Log copula density at normal scores ``x`` (n x m or m)."""
        x = np.atleast_2d(x)
        z = linalg.solve_triangular(self.chol, x.T, lower=True)
        quad = np.sum(z * z, axis=0) - np.sum(x * x, axis=1)
        return -0.5 * self.logdet - 0.5 * quad

    def log_density(self, u):
        """log c(u) = -1/2 log|Gamma| - 1/2 x'(Gamma^{-1} - I) x, x = Phi^{-1}(u)."""
        u = np.asarray(u, dtype=float)
        out = self.log_density_scores(norm_scores(u))
        return out if u.ndim > 1 else float(out[0])

    def loglik_from_scores(self, x):
        """Summed log copula density of the rows of ``x`` via the scatter matrix."""
        x = np.atleast_2d(x)
        return self.loglik_from_scatter(x.T @ x, x.shape[0])

    def loglik_from_scatter(self, scatter, n):
        """-n/2 log|Gamma| - 1/2 tr((Gamma^{-1} - I) S) for S = X'X."""
        w = linalg.cho_solve((self.chol, True), scatter)
        return -0.5 * n * self.logdet - 0.5 * (np.trace(w) - np.trace(scatter))

    def log_likelihood(self, margins, data):
        """Copula log density plus marginal log densities, summed over rows of ``data``."""
        data = np.atleast_2d(np.asarray(data, dtype=float))
        u = np.column_stack([mg.cdf(data[:, j]) for j, mg in enumerate(margins)])
        marg = sum(np.sum(mg.log_density(data[:, j])) for j, mg in enumerate(margins))
        return float(np.sum(self.log_density(u)) + marg)

    def precision(self):
        return linalg.cho_solve((self.chol, True), np.eye(self.dim))

    def sample_scores(self, n, rng):
        z = rng.standard_normal((n, self.dim))
        return z @ self.chol.T

    def sample_u(self, n, rng):
        return norm_cdf(self.sample_scores(n, rng))

    def bivariate_margin_cdf(self, i, j, ui, uj):
        """CDF of (U_i, U_j): Phi_2(Phi^{-1}(u_i), Phi^{-1}(u_j); Gamma_ij)."""
        if not 0 <= i < j < self.dim:
            raise ValueError("need 0 <= i < j < dim")
        return bvn_cdf(norm_ppf(ui), norm_ppf(uj), self.corr[i, j])
