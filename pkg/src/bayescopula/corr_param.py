"""Parameterisations of a Gaussian-copula correlation matrix.

Two routes to a correlation matrix ``Gamma`` are supported:

* a unit-diagonal upper Cholesky factor ``R`` of ``Sigma^{-1}``, with
  ``Gamma = diag(Sigma)^{-1/2} Sigma diag(Sigma)^{-1/2}``;
* lag-ordered semi-partial correlations
  ``lambda[t, s] = Corr(X_t, X_s | X_{t-1}, ..., X_{s+1})``, each free in (-1, 1).

Triangular parameter arrays are stored as vectors in lower-triangular
row-major order: (1,0), (2,0), (2,1), (3,0), ... (0-based ``(t, s)``).
"""
import numpy as np
from scipy import linalg
from scipy.special import gammaln

from .margins import DomainError


def pair_index(m):
    """List of (t, s) pairs, t > s, in lower-triangular row-major order."""
    return [(t, s) for t in range(1, m) for s in range(t)]


def n_pairs(m):
    return m * (m - 1) // 2


def dim_from_pairs(n):
    m = int(round((1 + np.sqrt(1 + 8 * n)) / 2))
    if n_pairs(m) != n:
        raise DomainError(f"{n} is not a triangular number of pairs")
    return m


def tril_vector(mat):
    m = mat.shape[0]
    return np.array([mat[t, s] for t, s in pair_index(m)])


def tril_matrix(vec, m=None, diag=0.0):
    vec = np.asarray(vec, dtype=float)
    m = dim_from_pairs(len(vec)) if m is None else m
    out = np.zeros((m, m))
    for val, (t, s) in zip(vec, pair_index(m)):
        out[t, s] = val
    np.fill_diagonal(out, diag)
    return out


def corr_from_vector(vec, m=None):
    """Symmetric unit-diagonal matrix from its lower-triangular vector."""
    low = tril_matrix(vec, m)
    return low + low.T + np.eye(low.shape[0])


def check_correlation(gamma, tol=1e-10):
    """Validate a correlation matrix; returns it as a float array."""
    g = np.array(gamma, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise DomainError("correlation matrix must be square")
    if not np.allclose(g, g.T, atol=1e-12):
        raise DomainError("correlation matrix must be symmetric")
    if not np.allclose(np.diag(g), 1.0, atol=1e-12):
        raise DomainError("correlation matrix must have unit diagonal")
    if np.linalg.eigvalsh(g)[0] <= tol:
        raise DomainError("correlation matrix is not positive definite")
    return g


# ---------------------------------------------------------------- Cholesky
def gamma_from_cholesky(r, m=None):
    """Correlation matrix from the strictly upper off-diagonals of ``R``.

    ``r`` lists ``r[k, j]`` for ``j = 1..m-1, k < j`` (0-based), which is the
    same ordering as :func:`pair_index` with ``(t, s) -> (j, k)``.
    """
    r = np.asarray(r, dtype=float)
    m = dim_from_pairs(len(r)) if m is None else m
    R = np.eye(m)
    for val, (j, k) in zip(r, pair_index(m)):
        R[k, j] = val
    Rinv = linalg.solve_triangular(R, np.eye(m), lower=False, unit_diagonal=True)
    sigma = Rinv @ Rinv.T
    d = 1.0 / np.sqrt(np.diag(sigma))
    g = sigma * np.outer(d, d)
    np.fill_diagonal(g, 1.0)
    return 0.5 * (g + g.T)


def cholesky_from_gamma(gamma):
    """Inverse of :func:`gamma_from_cholesky`."""
    g = check_correlation(gamma)
    m = g.shape[0]
    omega = np.linalg.inv(g)
    U = np.linalg.cholesky(omega).T
    R = U / np.diag(U)[None, :]
    return np.array([R[k, j] for j, k in pair_index(m)])


# ---------------------------------------------------------- semi-partials
def gamma_from_partials(lam, m=None):
    """Correlation matrix from lag-ordered semi-partial correlations.

    Works outward by lag: for pair (t, s) with intermediate set
    S = {s+1, ..., t-1},
    ``Gamma[t, s] = a' B^{-1} c + lam[t, s] * sqrt((1 - a' B^{-1} a)(1 - c' B^{-1} c))``
    where ``a = Gamma[s, S]``, ``c = Gamma[t, S]``, ``B = Gamma[S, S]``.
    """
    lam = np.asarray(lam, dtype=float)
    m = dim_from_pairs(len(lam)) if m is None else m
    L = tril_matrix(lam, m)
    if np.any(np.abs(lam) >= 1.0):
        raise DomainError("semi-partial correlations must lie in (-1, 1)")
    g = np.eye(m)
    for k in range(1, m):
        for t in range(k, m):
            s = t - k
            if k == 1:
                val = L[t, s]
            else:
                S = slice(s + 1, t)
                a = g[s, S]
                c = g[t, S]
                Ba, Bc = np.linalg.solve(g[S, S], np.column_stack([a, c])).T
                vs = 1.0 - a @ Ba
                vt = 1.0 - c @ Bc
                val = a @ Bc + L[t, s] * np.sqrt(vs * vt)
            g[t, s] = g[s, t] = val
    return g


def partials_from_gamma(gamma):
    """Semi-partial correlations (lower-triangular vector) of a correlation matrix."""
    g = check_correlation(gamma)
    m = g.shape[0]
    out = []
    for t, s in pair_index(m):
        if t - s == 1:
            out.append(g[t, s])
            continue
        S = slice(s + 1, t)
        cf = linalg.cho_factor(g[S, S])
        a, c = g[s, S], g[t, S]
        Ba = linalg.cho_solve(cf, a)
        Bc = linalg.cho_solve(cf, c)
        out.append((g[t, s] - a @ Bc) / np.sqrt((1.0 - a @ Ba) * (1.0 - c @ Bc)))
    return np.array(out)


# ---------------------------------------------------------- indicator prior
def indicator_log_prior(gamma, n=None):
    """log pi(gamma) = -log(N + 1) - log binom(N, w); uniform prior on the model size w."""
    gamma = np.asarray(gamma, dtype=int)
    n = len(gamma) if n is None else n
    if len(gamma) != n:
        raise DomainError(f"expected {n} indicators, got {len(gamma)}")
    w = int(gamma.sum())
    log_binom = gammaln(n + 1) - gammaln(w + 1) - gammaln(n - w + 1)
    return -np.log(n + 1.0) - log_binom


def indicator_conditional(w_other, n):
    """(delta0, delta1): prior probabilities of one indicator being 0/1 given the others.

    ``w_other`` counts the ones among the remaining ``n - 1`` indicators.  The
    odds follow from the beta-function form B(N - w + 1, w + 1):
    delta1 / delta0 = (w_other + 1) / (n - w_other).
    """
    odds = (w_other + 1.0) / (n - w_other)
    d1 = odds / (1.0 + odds)
    return 1.0 - d1, d1


def lambda_log_prior(lam, kind="uniform", a=1.0, b=1.0):
    """Log prior of a semi-partial correlation on (-1, 1).

    ``uniform`` or ``beta`` (Beta(a, b) on (lam + 1)/2).
    """
    if not -1.0 < lam < 1.0:
        return -np.inf
    if kind == "uniform":
        return -np.log(2.0)
    x = 0.5 * (lam + 1.0)
    return ((a - 1.0) * np.log(x) + (b - 1.0) * np.log1p(-x)
            - (gammaln(a) + gammaln(b) - gammaln(a + b)) - np.log(2.0))
