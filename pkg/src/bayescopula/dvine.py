"""D-vine pair-copula constructions with indicator-based pair selection.

Pairs are indexed 0-based as ``(t, s)`` with ``t > s``; the pair-copula
``c[t, s]`` joins ``U_t`` and ``U_s`` conditional on ``U_{s+1}, ..., U_{t-1}``.
Conditional probabilities live in an ``m x m`` array ``A`` with
``A[t, s] = u_{t|s}`` (forward, t > s), ``A[s, t] = u_{s|t}`` (backward) and
``A[t, t] = u_t``.
"""
import numpy as np

from .corr_param import n_pairs, pair_index, tril_matrix
from .margins import DomainError
from .pair_copulas import PairCopula
from .special import norm_cdf, norm_scores


class DVine:
    """D-vine copula with a common pair family and per-pair indicators.

    Parameters
    ----------
    family : str
        Pair-copula family shared by every active pair.
    phi : array_like
        Pair parameters as a lower-triangular row-major vector (length m(m-1)/2).
        Entries with ``gamma == 0`` are ignored.
    gamma : array_like of {0, 1}, optional
        Inclusion indicators; defaults to all ones.
    """

    def __init__(self, family, phi, gamma=None, dim=None):
        phi = np.asarray(phi, dtype=float)
        npair = len(phi)
        self.dim = dim if dim is not None else int(round((1 + np.sqrt(1 + 8 * npair)) / 2))
        if n_pairs(self.dim) != npair:
            raise DomainError("phi length does not match a D-vine dimension")
        self.family = family
        self.phi = phi
        self.gamma = (np.ones(npair, dtype=int) if gamma is None
                      else np.asarray(gamma, dtype=int))
        self._pairs = {}
        for idx, (t, s) in enumerate(pair_index(self.dim)):
            if self.gamma[idx]:
                self._pairs[(t, s)] = PairCopula(family, phi[idx])
            else:
                self._pairs[(t, s)] = None

    def __repr__(self):
        return f"DVine(family={self.family!r}, dim={self.dim})"

    def pair(self, t, s):
        """The pair-copula for (t, s); None stands for independence."""
        return self._pairs[(t, s)]

    def phi_matrix(self):
        return tril_matrix(self.phi, self.dim)

    # ------------------------------------------------------------------
    def _sweep(self, u, need_args=True):
        # Arguments are carried as normal scores Phi^{-1}(u) so that both
        # tails keep full precision through the recursion.
        u = np.atleast_2d(np.asarray(u, dtype=float))
        n, m = u.shape
        if m != self.dim:
            raise DomainError(f"expected {self.dim} columns, got {m}")
        X = np.empty((m, m, n))
        for t in range(m):
            X[t, t] = norm_scores(u[:, t])
        logc = np.zeros(n)
        for k in range(1, m):
            last = k == m - 1
            for i in range(k, m):
                s = i - k
                a1 = X[i, s + 1]       # u_{i|i-k+1}
                a2 = X[s, i - 1]       # u_{i-k|i-1}
                cop = self._pairs[(i, s)]
                if cop is None:
                    # independence: h(u1|u2) = u1, density 1
                    X[i, s] = a1
                    X[s, i] = a2
                    continue
                logc += cop.log_pdf_scores(a1, a2)
                if need_args or not last:
                    X[i, s] = cop.h_scores(a1, a2)
                    X[s, i] = cop.h_scores(a2, a1)
        return X, logc

    def evaluate_arguments(self, u):
        """Fill the array of conditional probabilities for each row of ``u``.

        Returns an array of shape (m, m, n); for a single observation the
        trailing axis has length 1.
        """
        return norm_cdf(self._sweep(u, need_args=True)[0])

    def log_density(self, u):
        u = np.asarray(u, dtype=float)
        logc = self._sweep(u, need_args=False)[1]
        return logc if u.ndim > 1 else float(logc[0])

    def sample_u(self, n, rng):
        """Draw ``n`` vectors by inverting the argument recursion.

        For each new variable t, u_{t|0} is uniform and
        u_{t|s+1} = h^{-1}(u_{t|s} | u_{s|t-1}) for s = 0..t-1.
        """
        m = self.dim
        w = rng.random((n, m))
        A = np.empty((m, m, n))
        A[0, 0] = w[:, 0]
        for t in range(1, m):
            A[t, 0] = w[:, t]
            for s in range(t):
                cop = self._pairs[(t, s)]
                cond = A[s, t - 1]
                nxt = A[t, s] if cop is None else cop.h_inverse(A[t, s], cond)
                if s + 1 < t:
                    A[t, s + 1] = nxt
                else:
                    A[t, t] = nxt
            for s in range(t - 1, -1, -1):
                cop = self._pairs[(t, s)]
                a1 = A[t, s + 1] if s + 1 < t else A[t, t]
                a2 = A[s, t - 1]
                A[s, t] = a2 if cop is None else cop.h(a2, a1)
        return np.stack([A[t, t] for t in range(m)], axis=1)
