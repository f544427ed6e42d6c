"""End-to-end sampling schemes.

* :func:`run_gaussian_continuous` - Gaussian copula, continuous margins,
  Gamma parameterised by semi-partial correlations or Cholesky elements;
* :func:`run_gaussian_selection` - the same with spike-and-slab selection
  over the semi-partial correlations;
* :func:`run_dvine_selection` - D-vine with a common pair family and
  selection over pair-copulas;
* :func:`run_gaussian_discrete` - Gaussian copula with discrete margins by
  data augmentation;
* :func:`run_exact_discrete` - a direct-likelihood MH sampler built on
  :func:`exact_discrete_loglik`, meant as a small-m oracle.

Every scheme is a generator of :class:`~bayescopula.mcmc.SweepRecord`,
one per sweep including burn-in; :mod:`bayescopula.inference` drops the
burn-in and applies thinning.
"""
from dataclasses import dataclass, field
from itertools import product

import numpy as np
from scipy import integrate, optimize, stats

from . import corr_param as cp
from .dvine import DVine
from .gaussian_copula import GaussianCopula
from .margins import DomainError, MarginSpec, empirical_margin
from .mcmc import (BoundedRW, GaussianRW, ProposalError, SweepRecord, build_t_proposal,
                   mh_independence_step, spike_slab_step)
from .pair_copulas import PairCopula, transform_spec
from .special import bvn_cdf, log_ndtr_diff, norm_cdf, norm_ppf, norm_scores, truncnorm_rvs

COPULA_TYPES = ("gaussian", "dvine", "independence")
PARAMETERISATIONS = ("partial", "cholesky")
# prior variance of the unconstrained pair parameter; Cholesky elements use 10 too
PAIR_PRIOR_VARIANCE = {"frank": 100.0, "gumbel": 10.0, "clayton": 10.0}
CHOLESKY_PRIOR_VARIANCE = 10.0
_PLACEHOLDER = {"normal": (0.0, 1.0), "studentt": (0.0, 1.0, 5.0), "bernoulli": (0.5,),
                "poisson": (1.0,), "negbinomial": (1.0, 0.5)}


class SamplerError(RuntimeError):
    """An internal invariant of a sampler was violated."""


@dataclass
class FitTask:
    """Everything a sampling scheme needs.

    ``margins`` may hold :class:`MarginSpec` objects or family names; either
    way the starting values come from moment fits to the data.
    """

    data: np.ndarray
    margins: list
    copula: str = "gaussian"
    family: str = "gaussian"
    parameterisation: str = "partial"
    selection: bool = False
    sweeps: int = 10000
    burn_in: int = None
    thin: int = 1
    step: float = 0.01
    adapt: bool = False
    proposal_df: float = 5.0
    freeze_proposals: bool = True
    proposal_refresh: int = 10
    block_size: int = 6
    lambda_prior: str = "uniform"
    lambda_beta: tuple = (1.0, 1.0)
    allow_negative_clayton: bool = False
    prior_only: bool = False
    keep_latent: bool = False
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.data = np.atleast_2d(np.asarray(self.data, dtype=float))
        n, m = self.data.shape
        if len(self.margins) != m:
            raise DomainError(f"{len(self.margins)} margins for {m} data columns")
        if not np.all(np.isfinite(self.data)):
            raise DomainError("data contain missing or non-finite values")
        self.margins = [_initial_margin(mg, self.data[:, j]) for j, mg in enumerate(self.margins)]
        if self.burn_in is None:
            self.burn_in = self.sweeps // 5
        if not (self.sweeps >= self.burn_in >= 0):
            raise DomainError("need sweeps >= burn_in >= 0")
        if self.thin < 1:
            raise DomainError("thin must be >= 1")
        if self.copula not in COPULA_TYPES:
            raise DomainError(f"unknown copula type {self.copula!r}")
        if self.parameterisation not in PARAMETERISATIONS:
            raise DomainError(f"unknown parameterisation {self.parameterisation!r}")
        if self.copula == "gaussian" and self.selection and self.parameterisation != "partial":
            raise DomainError("selection needs the semi-partial parameterisation")
        if self.copula == "dvine":
            PairCopula(self.family, 0.5 if self.family == "gaussian" else
                       (2.0 if self.family != "independence" else None))
        if self.step <= 0:
            raise DomainError("random-walk step must be positive")
        if self.proposal_refresh < 1:
            raise DomainError("proposal_refresh must be >= 1")
        for j, mg in enumerate(self.margins):
            if mg.discrete and np.any(self.data[:, j] != np.round(self.data[:, j])):
                raise DomainError(f"column {j} is not integer-valued but margin is {mg.family}")

    @property
    def dim(self):
        return self.data.shape[1]

    @property
    def discrete_flags(self):
        return [mg.discrete for mg in self.margins]


def _initial_margin(mg, y):
    if isinstance(mg, str):
        if mg == "empirical":
            return empirical_margin(y)
        if mg not in _PLACEHOLDER:
            raise DomainError(f"unknown margin family {mg!r}")
        mg = MarginSpec(mg, _PLACEHOLDER[mg])
    return mg.moment_fit(y)


# ------------------------------------------------------------- initial Gamma
def normal_scores_corr(data, shrink=0.95):
    """Correlation of rank-based normal scores, shrunk toward I."""
    n, m = data.shape
    ranks = np.column_stack([stats.rankdata(data[:, j]) for j in range(m)])
    x = norm_ppf(ranks / (n + 1.0))
    sd = x.std(axis=0)
    sd[sd == 0] = 1.0
    z = (x - x.mean(axis=0)) / sd
    r = (z.T @ z) / n
    np.fill_diagonal(r, 1.0)
    return shrink * r + (1.0 - shrink) * np.eye(m)


def _tau_to_phi(family, tau):
    if family == "clayton":
        tau = max(tau, 0.05)
        return 2.0 * tau / (1.0 - tau)
    if family == "gumbel":
        tau = max(tau, 0.05)
        return 1.0 / (1.0 - tau)
    tau = float(np.clip(tau, -0.9, 0.9))
    if abs(tau) < 0.02:
        tau = 0.02 if tau >= 0 else -0.02
    f = lambda p: PairCopula("frank", p).dependence()["tau"] - tau
    return optimize.brentq(f, 1e-6, 200.0) if tau > 0 else optimize.brentq(f, -200.0, -1e-6)


# ------------------------------------------------------------------- chain
class _Chain:
    def __init__(self, task, discrete, select=None):
        self.task = task
        self.discrete = discrete
        self.y = task.data
        self.n, self.m = self.y.shape
        self.margins = list(task.margins)
        self.kind = task.copula
        self.npair = cp.n_pairs(self.m)
        self.pairs = cp.pair_index(self.m)
        t = task
        if self.kind == "dvine" and t.family != "gaussian":
            self.to_free, self.from_free = transform_spec(t.family, t.allow_negative_clayton)
        sel = t.selection if select is None else select
        self.select = bool(sel) and self.kind != "independence" \
            and not (self.kind == "gaussian" and t.parameterisation == "cholesky")
        self.steps = np.full(self.npair, float(t.step))
        self.props = {}
        self._scatter = None
        self._init_state()

    # -- state ------------------------------------------------------------
    def _init_state(self):
        t = self.task
        g0 = normal_scores_corr(self.y)
        self.gamma = np.ones(self.npair, dtype=int)
        if self.kind == "gaussian" and t.parameterisation == "cholesky":
            self.latent = cp.cholesky_from_gamma(g0)
        elif self.kind == "gaussian" or (self.kind == "dvine" and t.family == "gaussian"):
            self.latent = cp.partials_from_gamma(g0)
        elif self.kind == "dvine":
            lam = cp.partials_from_gamma(g0)
            self.latent = np.array([_tau_to_phi(t.family, 2.0 / np.pi * np.arcsin(v))
                                    for v in lam])
        else:
            self.latent = np.zeros(self.npair)
        self.U = np.empty((self.n, self.m))
        self.X = np.empty((self.n, self.m))
        for j, mg in enumerate(self.margins):
            if self.discrete:
                A, B = self._bounds(j, mg)
                mid = norm_ppf(0.5 * (norm_cdf(A) + norm_cdf(B)))
                x = np.clip(mid, -6.0, 6.0)
                self.X[:, j] = np.minimum(np.maximum(x, A), np.nextafter(B, -np.inf))
            else:
                self.U[:, j] = mg.cdf(self.y[:, j])
                self.X[:, j] = norm_scores(self.U[:, j])
        if not np.all(np.isfinite(self._copula_loglik(self.latent, self.gamma))):
            raise SamplerError("initial copula state has zero likelihood")

    def _bounds(self, j, mg):
        yj = self.y[:, j]
        return norm_ppf(mg.cdf_left(yj)), norm_ppf(mg.cdf(yj))

    # -- copula evaluation -------------------------------------------------
    def _effective(self, latent, gamma):
        if self.kind == "dvine" and self.task.family != "gaussian":
            return np.where(gamma == 1, latent, np.nan)
        if self.kind == "gaussian" and self.task.parameterisation == "cholesky":
            return latent.copy()
        return latent * gamma

    def _corr(self, latent, gamma):
        if self.kind == "independence":
            return np.eye(self.m)
        if self.kind == "gaussian" and self.task.parameterisation == "cholesky":
            return cp.gamma_from_cholesky(latent, self.m)
        if self.kind == "gaussian" or self.task.family == "gaussian":
            return cp.gamma_from_partials(latent * gamma, self.m)
        return None

    def _copula_loglik(self, latent, gamma):
        """Copula log likelihood of the current U (or latent X) at given parameters."""
        if self.kind == "independence":
            return 0.0
        try:
            if self.kind == "dvine":
                vine = DVine(self.task.family, latent, gamma, dim=self.m)
                return float(np.sum(vine.log_density(self.U)))
            model = GaussianCopula(self._corr(latent, gamma), check=False)
        except (DomainError, np.linalg.LinAlgError):
            return -np.inf
        if self._scatter is None:
            self._scatter = self.X.T @ self.X
        return model.loglik_from_scatter(self._scatter, self.n)

    def full_loglik(self):
        """Log likelihood stored in the sweep record."""
        if self.task.prior_only:
            return 0.0
        if self.discrete:
            corr = self._corr(self.latent, self.gamma)
            model = GaussianCopula(corr)
            S = self.X.T @ self.X
            return float(model.loglik_from_scatter(S, self.n) - 0.5 * np.trace(S)
                         - 0.5 * self.n * self.m * np.log(2.0 * np.pi))
        out = self._copula_loglik(self.latent, self.gamma)
        for j, mg in enumerate(self.margins):
            out += float(np.sum(mg.log_density(self.y[:, j])))
        return float(out)

    # -- step 1 ------------------------------------------------------------
    def _margin_target(self, j, omega):
        """Log of the conditional posterior of margin j on its unconstrained scale."""
        mg0 = self.margins[j]
        yj = self.y[:, j]
        prior_only = self.task.prior_only
        if self.discrete or self.kind == "gaussian":
            others = [k for k in range(self.m) if k != j]
            v = self.X[:, others] @ omega[others, j]
        if self.discrete:
            sig = 1.0 / np.sqrt(omega[j, j])
            mu = -v * sig * sig

        def target(eta):
            eta = np.atleast_1d(eta)
            if not np.all(np.isfinite(eta)):
                return -np.inf
            try:
                mg = mg0.with_free(eta)
            except DomainError:
                return -np.inf
            lp = mg.log_prior_free(eta)
            if prior_only:
                return lp
            if self.discrete:
                A, B = self._bounds(j, mg)
                if np.any(~(A < B)):
                    return -np.inf
                return lp + float(np.sum(log_ndtr_diff((A - mu) / sig, (B - mu) / sig)))
            logf = float(np.sum(mg.log_density(yj)))
            if not np.isfinite(logf):
                return -np.inf
            u = mg.cdf(yj)
            if self.kind == "independence":
                cop = 0.0
            elif self.kind == "gaussian":
                x = norm_scores(u)
                cop = -0.5 * float(np.sum((omega[j, j] - 1.0) * x * x + 2.0 * x * v))
            else:
                U = self.U.copy()
                U[:, j] = u
                vine = DVine(self.task.family, self.latent, self.gamma, dim=self.m)
                cop = float(np.sum(vine.log_density(U)))
            return lp + logf + cop

        if self.discrete:
            return target, mu, sig
        return target, None, None

    def _step1(self, sweep, rng, omega):
        t = self.task
        flags = []
        for j in range(self.m):
            mg = self.margins[j]
            if mg.n_free == 0:
                flags.append(False)
                continue
            target, mu, sig = self._margin_target(j, omega)
            eta = mg.to_free()
            accepted = False
            for b0 in range(0, mg.n_free, t.block_size):
                idx = np.arange(b0, min(b0 + t.block_size, mg.n_free))

                def block_target(z, eta=eta, idx=idx):
                    full = eta.copy()
                    full[idx] = z
                    return target(full)

                old = self.props.get((j, b0))
                if old is None or ((sweep < t.burn_in or not t.freeze_proposals)
                                   and sweep % t.proposal_refresh == 0):
                    try:
                        old = build_t_proposal(block_target, eta[idx], df=t.proposal_df,
                                               scale0=None if old is None else old.scale,
                                               name=f"margin {j} ({mg.family})")
                    except ProposalError as exc:
                        raise SamplerError(str(exc)) from exc
                    self.props[(j, b0)] = old
                logp = block_target(eta[idx])
                z, _, acc = mh_independence_step(eta[idx], logp, block_target, old, rng)
                eta = eta.copy()
                eta[idx] = z
                accepted = accepted or acc
            mg = mg.with_free(eta)
            self.margins[j] = mg
            if self.discrete:
                A, B = self._bounds(j, mg)
                if np.any(~(A < B)):
                    raise SamplerError(f"empty truncation interval in column {j}")
                self.X[:, j] = truncnorm_rvs(A, B, mu, sig, rng)
            else:
                self.U[:, j] = mg.cdf(self.y[:, j])
                self.X[:, j] = norm_scores(self.U[:, j])
            self._scatter = None
            flags.append(bool(accepted))
        return flags

    # -- step 2 ------------------------------------------------------------
    def _pair_moves(self):
        """(to_value, from_value, proposal class, log prior) for the RW space."""
        t = self.task
        if self.kind == "gaussian" and t.parameterisation == "cholesky":
            var = CHOLESKY_PRIOR_VARIANCE
            return (lambda p: p), (lambda e: e), GaussianRW, \
                (lambda e: -0.5 * e * e / var - 0.5 * np.log(2 * np.pi * var))
        if self.kind == "gaussian" or t.family == "gaussian":
            a, b = t.lambda_beta
            return (lambda p: p), (lambda e: e), BoundedRW, \
                (lambda e: cp.lambda_log_prior(e, t.lambda_prior, a, b))
        var = PAIR_PRIOR_VARIANCE[t.family]
        return self.to_free, self.from_free, GaussianRW, \
            (lambda e: -0.5 * e * e / var - 0.5 * np.log(2 * np.pi * var))

    def _step2(self, rng, window):
        if self.kind == "independence":
            return []
        to_v, from_v, rw, log_prior = self._pair_moves()
        prior_only = self.task.prior_only
        self._scatter = None
        cur = 0.0 if prior_only else self._copula_loglik(self.latent, self.gamma)
        flags = []
        for k in range(self.npair):
            def lik(e, g, k=k):
                if prior_only:
                    return 0.0
                lat = self.latent.copy()
                gam = self.gamma.copy()
                try:
                    lat[k] = from_v(e)
                except (OverflowError, FloatingPointError):
                    return -np.inf
                gam[k] = g
                return self._copula_loglik(lat, gam)

            w_other = int(self.gamma.sum() - self.gamma[k])
            d0, d1 = cp.indicator_conditional(w_other, self.npair)
            g_old = int(self.gamma[k])
            with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
                e_new, g_new, cur, acc, _ = spike_slab_step(
                    float(to_v(self.latent[k])), g_old, cur, lik, log_prior,
                    rw(self.steps[k]), d0, d1, rng, select=self.select)
            if acc:
                self.latent[k] = from_v(e_new)
                self.gamma[k] = g_new
            if g_old == 1 and g_new == 1:
                window[k, 0] += 1
                window[k, 1] += int(acc)
            flags.append(bool(acc))
        return flags

    def _adapt(self, window):
        adapt_steps(self.steps, window)

    # -- invariants --------------------------------------------------------
    def check_latent_bounds(self):
        for j, mg in enumerate(self.margins):
            A, B = self._bounds(j, mg)
            x = self.X[:, j]
            bad = ~((A <= x) & (x < B))
            if np.any(bad):
                i = int(np.argmax(bad))
                raise SamplerError(
                    f"latent bound violated at row {i}, column {j}: "
                    f"{x[i]!r} not in [{A[i]!r}, {B[i]!r})")

    # -- driver ------------------------------------------------------------
    def records(self, rng):
        t = self.task
        window = np.zeros((self.npair, 2), dtype=int)
        corr = self._corr(self.latent, self.gamma)
        need_omega = self.discrete or (self.kind == "gaussian" and not t.prior_only
                                       and any(mg.n_free for mg in self.margins))
        for sweep in range(t.sweeps):
            # corr is the state left by the previous sweep
            omega = (GaussianCopula(corr, check=False).precision()
                     if need_omega and corr is not None else np.eye(self.m))
            flags = self._step1(sweep, rng, omega)
            flags += self._step2(rng, window)
            if self.discrete:
                self.check_latent_bounds()
            if t.adapt and sweep < t.burn_in and (sweep + 1) % 50 == 0:
                self._adapt(window)
            corr = self._corr(self.latent, self.gamma)
            yield SweepRecord(
                sweep=sweep,
                theta=[np.array(mg.params) for mg in self.margins],
                copula=self._effective(self.latent, self.gamma),
                latent_copula=self.latent.copy(),
                gamma=self.gamma.copy(),
                corr=None if corr is None else cp.tril_vector(corr),
                loglik=self.full_loglik(),
                accepted=np.array(flags, dtype=bool),
                latent=self.X.copy() if (self.discrete and t.keep_latent) else None,
            )


def adapt_steps(steps, window, lo=0.25, hi=0.45):
    """Rescale random-walk steps in place from a window of (tried, accepted) counts."""
    for k in range(len(steps)):
        tried, acc = window[k]
        if tried < 10:
            continue
        rate = acc / tried
        if rate < lo:
            steps[k] *= 0.7
        elif rate > hi:
            steps[k] *= 1.4
        steps[k] = float(np.clip(steps[k], 1e-4, 2.0))
    window[:] = 0


# ------------------------------------------------------------ public API
def _require(task, discrete):
    flags = task.discrete_flags
    if discrete and not all(flags):
        raise DomainError("the discrete scheme needs every margin to be discrete")
    if not discrete and any(flags):
        raise DomainError("discrete margins need the data-augmentation scheme")


def run_gaussian_continuous(task, rng):
    """Gaussian copula with continuous margins (no selection)."""
    _require(task, False)
    if task.copula not in ("gaussian", "independence"):
        raise DomainError("run_gaussian_continuous needs a Gaussian copula")
    return _Chain(task, discrete=False, select=False).records(rng)


def run_gaussian_selection(task, rng):
    """Gaussian copula with spike-and-slab selection over semi-partials."""
    _require(task, False)
    if task.copula != "gaussian" or task.parameterisation != "partial":
        raise DomainError("selection needs a Gaussian copula in semi-partials")
    return _Chain(task, discrete=False).records(rng)


def run_dvine_selection(task, rng):
    """D-vine copula; selection over pair-copulas when ``task.selection``."""
    _require(task, False)
    if task.copula != "dvine":
        raise DomainError("run_dvine_selection needs a D-vine copula")
    return _Chain(task, discrete=False).records(rng)


def run_gaussian_discrete(task, rng):
    """Gaussian copula with discrete margins by latent-variable augmentation."""
    _require(task, True)
    if task.copula not in ("gaussian", "independence"):
        raise DomainError("the discrete scheme supports the Gaussian copula only")
    return _Chain(task, discrete=True).records(rng)


def run(task, rng):
    """Dispatch on the task's copula type and margin discreteness."""
    if any(task.discrete_flags):
        return run_gaussian_discrete(task, rng)
    if task.copula == "dvine":
        return run_dvine_selection(task, rng)
    if task.selection:
        return run_gaussian_selection(task, rng)
    return run_gaussian_continuous(task, rng)


def replay_loglik(task, record):
    """Recompute the log likelihood stored in ``record`` from its state."""
    chain = _Chain.__new__(_Chain)
    chain.task = task
    chain.discrete = any(task.discrete_flags)
    chain.y = task.data
    chain.n, chain.m = task.data.shape
    chain.kind = task.copula
    chain.npair = cp.n_pairs(chain.m)
    chain.margins = [MarginSpec(mg.family, tuple(th), mg.sample)
                     for mg, th in zip(task.margins, record.theta)]
    chain.latent = np.asarray(record.latent_copula, dtype=float)
    chain.gamma = np.asarray(record.gamma, dtype=int)
    chain._scatter = None
    if chain.discrete:
        if record.latent is None:
            raise ValueError("record carries no latent matrix")
        chain.X = np.asarray(record.latent, dtype=float)
    else:
        chain.U = np.column_stack([mg.cdf(chain.y[:, j]) for j, mg in enumerate(chain.margins)])
        chain.X = norm_scores(chain.U)
    return chain.full_loglik()


# ------------------------------------------------- exact discrete likelihood
def _gaussian_corner(corr, w):
    keep = []
    for j, wj in enumerate(w):
        if wj <= 0.0:
            return 0.0
        if wj < 1.0:
            keep.append(j)
    if not keep:
        return 1.0
    z = norm_ppf(np.asarray(w)[keep])
    if len(keep) == 1:
        return float(w[keep[0]])
    sub = corr[np.ix_(keep, keep)]
    if len(keep) == 2:
        return float(bvn_cdf(z[0], z[1], sub[0, 1]))
    if len(keep) == 3:
        return _tvn_cdf(z, sub)
    # scipy's randomised lattice rule; not bit-reproducible across calls
    return float(stats.multivariate_normal.cdf(z, mean=np.zeros(len(keep)), cov=sub,
                                               maxpts=2_000_000 * len(keep),
                                               abseps=1e-12, releps=1e-10))


def _tvn_cdf(z, corr):
    """Trivariate normal CDF by quadrature over the third coordinate.

    Given X_3 = x, (X_1, X_2) is bivariate normal with means corr[k, 2] x,
    variances 1 - corr[k, 2]^2 and the partial correlation of 1 and 2 given 3.
    """
    r13, r23, r12 = corr[0, 2], corr[1, 2], corr[0, 1]
    s1, s2 = np.sqrt(1 - r13 ** 2), np.sqrt(1 - r23 ** 2)
    rho = (r12 - r13 * r23) / (s1 * s2)

    def integrand(x):
        return stats.norm.pdf(x) * bvn_cdf((z[0] - r13 * x) / s1, (z[1] - r23 * x) / s2, rho)

    lo = min(-9.0, z[2] - 1.0)
    val, _ = integrate.quad(integrand, lo, z[2], epsabs=1e-14, epsrel=1e-11, limit=200)
    return float(val)


def exact_discrete_loglik(model, margins, data):
    """Log likelihood of discrete data by differencing the copula CDF.

    Parameters
    ----------
    model : GaussianCopula or PairCopula
    margins : sequence of MarginSpec
    data : array_like, shape (n, m)

    Each observation contributes the log of the rectangle probability
    ``sum_eps (-1)^(m - |eps|) C(w(eps))`` over the 2^m corners.  Identical
    rows are evaluated once.
    """
    data = np.atleast_2d(np.asarray(data, dtype=float))
    if data.shape[1] > 12:
        raise DomainError("exact differencing is limited to m <= 12")
    rows, inverse, counts = np.unique(data, axis=0, return_inverse=True, return_counts=True)
    return _exact_grouped(model, margins, rows, counts, np.asarray(inverse).ravel())


def _exact_grouped(model, margins, rows, counts, inverse):
    m = rows.shape[1]
    if isinstance(model, PairCopula) and m != 2:
        raise DomainError("a pair-copula needs two columns")
    total = 0.0
    for r, (row, cnt) in enumerate(zip(rows, counts)):
        a = [float(margins[j].cdf_left(row[j])) for j in range(m)]
        b = [float(margins[j].cdf(row[j])) for j in range(m)]
        prob = 0.0
        for eps in product((0, 1), repeat=m):
            w = [b[j] if e else a[j] for j, e in enumerate(eps)]
            sign = -1.0 if (m - sum(eps)) % 2 else 1.0
            if isinstance(model, PairCopula):
                c = float(model.cdf(w[0], w[1]))
            else:
                c = _gaussian_corner(model.corr, w)
            prob += sign * c
        if prob < -1e-12:
            i = int(np.flatnonzero(inverse == r)[0])
            raise DomainError(f"rectangle probability {prob!r} is negative at observation {i}")
        if prob <= 0.0:
            return -np.inf
        total += cnt * np.log(prob)
    return float(total)


def run_exact_discrete(task, rng):
    """MH on the exact differenced likelihood for a Gaussian copula in semi-partials.

    Margins use the same t proposals as the augmented scheme; semi-partials
    use the bounded random walk.  Intended for small m and few distinct rows.
    """
    _require(task, True)
    m = task.dim
    npair = cp.n_pairs(m)
    margins = list(task.margins)
    lam = cp.partials_from_gamma(normal_scores_corr(task.data))
    a, b = task.lambda_beta
    rows, inverse, counts = np.unique(task.data, axis=0, return_inverse=True,
                                      return_counts=True)
    inverse = np.asarray(inverse).ravel()

    def loglik(margs, lam):
        try:
            model = GaussianCopula(cp.gamma_from_partials(lam, m))
            return _exact_grouped(model, margs, rows, counts, inverse)
        except (DomainError, np.linalg.LinAlgError):
            return -np.inf

    cur = loglik(margins, lam)
    props = [None] * m
    steps = np.full(npair, float(task.step))
    window = np.zeros((npair, 2), dtype=int)
    for sweep in range(task.sweeps):
        flags = []
        for j in range(m):
            mg0 = margins[j]

            def target(eta, j=j, mg0=mg0):
                try:
                    mg = mg0.with_free(np.atleast_1d(eta))
                except DomainError:
                    return -np.inf
                trial = margins[:j] + [mg] + margins[j + 1:]
                return mg.log_prior_free(eta) + loglik(trial, lam)

            eta = mg0.to_free()
            if props[j] is None or ((sweep < task.burn_in or not task.freeze_proposals)
                                    and sweep % task.proposal_refresh == 0):
                props[j] = build_t_proposal(target, eta, df=task.proposal_df,
                                            scale0=None if props[j] is None else props[j].scale,
                                            name=f"margin {j}")
            eta, _, acc = mh_independence_step(eta, target(eta), target, props[j], rng)
            margins[j] = mg0.with_free(eta)
            flags.append(bool(acc))
        cur = loglik(margins, lam)
        for k in range(npair):
            def lik(v, g, k=k):
                trial = lam.copy()
                trial[k] = v
                return loglik(margins, trial)

            v, _, cur, acc, _ = spike_slab_step(
                lam[k], 1, cur, lik, lambda e: cp.lambda_log_prior(e, task.lambda_prior, a, b),
                BoundedRW(steps[k]), 0.5, 0.5, rng, select=False)
            lam[k] = v
            window[k] += (1, int(acc))
            flags.append(bool(acc))
        if task.adapt and sweep < task.burn_in and (sweep + 1) % 50 == 0:
            adapt_steps(steps, window)
        corr = cp.gamma_from_partials(lam, m)
        yield SweepRecord(sweep=sweep, theta=[np.array(mg.params) for mg in margins],
                          copula=lam.copy(), latent_copula=lam.copy(),
                          gamma=np.ones(npair, dtype=int), corr=cp.tril_vector(corr),
                          loglik=float(cur), accepted=np.array(flags, dtype=bool))
