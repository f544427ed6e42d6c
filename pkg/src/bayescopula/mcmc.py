"""MCMC building blocks.

* multivariate-t independence proposals centred at a numerically located
  mode with scale from a finite-difference Hessian;
* random-walk proposals truncated to (-1, 1) with the bound correction;
* the joint (value, indicator) spike-and-slab MH step.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy import special as sc


class ProposalError(RuntimeError):
    """Mode search failed for a parameter block."""


# ---------------------------------------------------------------- t proposal
class TProposal:
    """Multivariate t with location ``mode``, scale matrix ``scale``, ``df`` degrees of freedom."""

    def __init__(self, mode, scale, df=5.0):
        self.mode = np.atleast_1d(np.asarray(mode, dtype=float))
        self.scale = np.atleast_2d(np.asarray(scale, dtype=float))
        self.df = float(df)
        self.chol = np.linalg.cholesky(self.scale)
        self._chol_inv = np.linalg.inv(self.chol)
        self.dim = len(self.mode)
        d, nu = self.dim, self.df
        self._const = (sc.gammaln((nu + d) / 2) - sc.gammaln(nu / 2)
                       - 0.5 * d * np.log(nu * np.pi)
                       - np.sum(np.log(np.diag(self.chol))))

    def logpdf(self, x):
        z = self._chol_inv @ (np.asarray(x, dtype=float) - self.mode)
        return self._const - 0.5 * (self.df + self.dim) * np.log1p(z @ z / self.df)

    def sample(self, rng):
        z = rng.standard_normal(self.dim)
        w = rng.chisquare(self.df)
        return self.mode + self.chol @ z / np.sqrt(w / self.df)


def fd_gradient(f, x, rel=1e-5):
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(len(x)):
        h = rel * (1.0 + abs(x[i]))
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2.0 * h)
    return g


def fd_hessian(f, x, rel=1e-4, fx=None):
    """Central second differences; steps shrink if f is non-finite nearby."""
    x = np.asarray(x, dtype=float)
    d = len(x)
    fx = f(x) if fx is None else fx
    for _ in range(30):
        h = rel * (1.0 + np.abs(x))
        H = np.empty((d, d))
        for i in range(d):
            ei = np.zeros(d)
            ei[i] = h[i]
            H[i, i] = (f(x + ei) - 2.0 * fx + f(x - ei)) / (h[i] * h[i])
            for j in range(i):
                ej = np.zeros(d)
                ej[j] = h[j]
                H[i, j] = H[j, i] = (f(x + ei + ej) - f(x + ei - ej)
                                     - f(x - ei + ej) + f(x - ei - ej)) / (4.0 * h[i] * h[j])
        if np.all(np.isfinite(H)):
            return H
        rel *= 0.1
    raise ProposalError("Hessian is not finite at the mode")


def find_mode(log_target, x0, gtol=1e-6, maxiter=200, inv_hess0=None, name="block"):
    """Maximise ``log_target`` by BFGS with central-difference gradients.

    Returns ``(mode, value)``.  Stops when the gradient inf-norm drops below
    ``gtol``, after ``maxiter`` iterations, or when the line search can make
    no further progress.
    """
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    fx = log_target(x)
    if not np.isfinite(fx):
        raise ProposalError(f"log target is not finite at the start of block {name!r}")

    def neg(z):
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            v = log_target(z)
        return -v if np.isfinite(v) else np.inf

    g = fd_gradient(neg, x)
    d = len(x)
    Hinv = np.eye(d) if inv_hess0 is None else np.array(inv_hess0, dtype=float)
    scaled = inv_hess0 is not None
    for _ in range(maxiter):
        if not np.all(np.isfinite(g)):
            raise ProposalError(f"non-finite gradient in block {name!r}")
        if np.max(np.abs(g)) < gtol:
            break
        p = -Hinv @ g
        slope = g @ p
        if slope >= 0:
            Hinv = np.eye(d)
            scaled = False
            p = -g
            slope = g @ p
        if not scaled:
            # no curvature information yet: keep the trial step at unit length
            norm = np.sqrt(p @ p)
            if norm > 1.0:
                p = p / norm
                slope = g @ p
        t = 1.0
        while True:
            xn = x + t * p
            fn = neg(xn)
            if np.isfinite(fn) and fn <= -fx + 1e-4 * t * slope:
                break
            t *= 0.5
            if t < 1e-9:
                break
        if t < 1e-9:
            # no acceptable step: the gradient is at the finite-difference noise floor
            break
        gn = fd_gradient(neg, xn)
        s = xn - x
        y = gn - g
        sy = s @ y
        if sy > 1e-12 * np.sqrt((s @ s) * (y @ y)):
            if not scaled:
                Hinv = (sy / (y @ y)) * np.eye(d)
                scaled = True
            rho = 1.0 / sy
            V = np.eye(d) - rho * np.outer(s, y)
            Hinv = V @ Hinv @ V.T + rho * np.outer(s, s)
        done = abs(fx + fn) <= 1e-13 * (1.0 + abs(fx))
        x, fx, g = xn, -fn, gn
        if done:
            break
    return x, fx


def regularised_scale(neg_hess, floor=1e-8):
    """Inverse of a symmetrised ``-H`` with eigenvalues floored at ``floor``."""
    A = 0.5 * (neg_hess + neg_hess.T)
    w, V = np.linalg.eigh(A)
    w = np.maximum(w, floor)
    return (V / w) @ V.T


def build_t_proposal(log_target, theta0, df=5.0, scale0=None, name="block"):
    """t proposal at the mode of ``log_target`` with scale ``-H^{-1}``."""
    mode, fmode = find_mode(log_target, theta0, inv_hess0=scale0, name=name)
    H = fd_hessian(log_target, mode, fx=fmode)
    return TProposal(mode, regularised_scale(-H), df)


def mh_independence_step(theta, logp, log_target, prop, rng):
    """One MH step with an independence proposal.

    ``logp`` is ``log_target(theta)``.  Returns ``(theta, logp, accepted)``.
    """
    cand = prop.sample(rng)
    lp_cand = log_target(cand)
    log_u = np.log(rng.random())
    if not np.isfinite(lp_cand):
        return theta, logp, False
    log_ratio = lp_cand - logp + prop.logpdf(theta) - prop.logpdf(cand)
    if log_u < log_ratio:
        return cand, lp_cand, True
    return theta, logp, False


# ------------------------------------------------------------ random walks
@dataclass
class BoundedRW:
    """Normal random walk truncated to (-1, 1)."""

    step: float = 0.01

    def propose(self, old, rng):
        """Return ``(new, log_kappa)``; kappa corrects for the truncation."""
        s = self.step
        old = float(old)
        a, b = (-1.0 - old) / s, (1.0 - old) / s
        if not (a < 0.0 < b):
            raise ValueError(f"random-walk state {old!r} is outside (-1, 1)")
        # a < 0 < b, so the inverse-CDF branch of truncnorm_rvs applies; done in scalars
        pa, pb = sc.ndtr(a), sc.ndtr(b)
        z = min(max(sc.ndtri(pa + rng.random() * (pb - pa)), a), b)
        # keep strictly inside (-1, 1)
        new = min(max(old + s * z, -1.0 + 1e-15), 1.0 - 1e-15)
        log_kappa = _log_mass(a, b) - _log_mass((-1.0 - new) / s, (1.0 - new) / s)
        return new, float(log_kappa)


def _log_mass(a, b):
    # log(Phi(b) - Phi(a)) for a < 0 < b, the scalar case of log_ndtr_diff
    log_hi = sc.log_ndtr(b)
    return log_hi + np.log1p(-np.exp(sc.log_ndtr(a) - log_hi))


@dataclass
class GaussianRW:
    """Unbounded normal random walk (kappa = 1)."""

    step: float = 0.01

    def propose(self, old, rng):
        return old + self.step * rng.standard_normal(), 0.0


def spike_slab_step(value, gamma, cur_loglik, loglik, log_prior, proposal,
                    delta0, delta1, rng, select=True):
    """Joint MH update of a latent value and its inclusion indicator.

    Parameters
    ----------
    value, gamma : float, int
        Current latent value and indicator.
    cur_loglik : float
        Log likelihood at the current state.
    loglik : callable
        ``loglik(value, gamma)``; with ``gamma == 0`` the value is ignored.
    log_prior : callable
        Log prior density of the latent value.
    proposal : object with ``propose(old, rng) -> (new, log_kappa)``
    delta0, delta1 : float
        Conditional prior probabilities of ``gamma = 0`` and ``gamma = 1``.
    select : bool
        When False the indicator is held at its current value and no
        indicator draw is made.

    Returns
    -------
    (value, gamma, loglik, accepted, n_lik_evals)
    """
    g_new = int(rng.random() < 0.5) if select else int(gamma)
    v_new, log_kappa = proposal.propose(value, rng)
    log_u = np.log(rng.random())
    log_prior_ratio = log_prior(v_new) - log_prior(value)
    evals = 0
    if gamma == 0 and g_new == 0:
        ll_new = cur_loglik
        log_alpha = 0.0
    elif gamma == 0:
        ll_new = loglik(v_new, 1)
        evals = 1
        log_alpha = ll_new + np.log(delta1) - cur_loglik - np.log(delta0)
    elif g_new == 0:
        ll_new = loglik(v_new, 0)
        evals = 1
        log_alpha = ll_new + np.log(delta0) - cur_loglik - np.log(delta1)
    else:
        ll_new = loglik(v_new, 1)
        evals = 1
        log_alpha = ll_new - cur_loglik
    total = log_alpha + log_prior_ratio + log_kappa
    if np.isfinite(ll_new) and log_u < total:
        return v_new, g_new, ll_new, True, evals
    return value, int(gamma), cur_loglik, False, evals


# ------------------------------------------------------------------ record
@dataclass
class SweepRecord:
    """State of a chain after one sweep.

    ``copula`` holds the effective copula parameters (semi-partials with
    zeros where excluded, Cholesky off-diagonals, or pair parameters with
    NaN where excluded); ``latent_copula`` the latent values behind them.
    ``corr`` is the lower-triangular vector of Gamma for Gaussian models.
    """

    sweep: int
    theta: list
    copula: np.ndarray
    latent_copula: np.ndarray
    gamma: np.ndarray
    corr: np.ndarray
    loglik: float
    accepted: np.ndarray
    latent: np.ndarray = field(default=None, repr=False)
