"""Univariate marginal models.

Each margin exposes its CDF, the left-hand limit of the CDF, the log
density (or log mass), the quantile function, and a log prior on an
unconstrained parameterisation used by the MH updates.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy import special as sc

from .special import norm_cdf, norm_ppf


class DomainError(ValueError):
    """A parameter or argument lies outside its admissible domain."""


# (name, kind) per family; kind selects the unconstrained transform and prior.
FAMILIES = {
    "normal": (("mu", "location"), ("sigma", "positive")),
    "studentt": (("mu", "location"), ("sigma", "positive"), ("nu", "positive")),
    "negbinomial": (("r", "positive"), ("p", "probability")),
    "bernoulli": (("p", "probability"),),
    "poisson": (("rate", "positive"),),
    "empirical": (),
}
DISCRETE = {"negbinomial", "bernoulli", "poisson"}

# Prior variances on the unconstrained scale.
PRIOR_VARIANCE = {"location": 100.0, "positive": 10.0, "probability": 4.0}


def _to_free(kind, v):
    if kind == "positive":
        return np.log(v)
    if kind == "probability":
        return sc.logit(v)
    return v


def _from_free(kind, e):
    if kind == "positive":
        return np.exp(e)
    if kind == "probability":
        return sc.expit(e)
    return e


@dataclass(frozen=True)
class MarginSpec:
    """A univariate marginal model ``F_j(.; theta_j)``.

    Parameters
    ----------
    family : str
        One of ``normal``, ``studentt``, ``negbinomial``, ``bernoulli``,
        ``poisson``, ``empirical``.
    params : tuple of float
        Natural parameters in the order of ``FAMILIES[family]``.
    sample : tuple of float
        Data for the ``empirical`` family only.
    """

    family: str
    params: tuple = ()
    sample: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"unknown margin family {self.family!r}")
        spec = FAMILIES[self.family]
        params = tuple(float(p) for p in self.params)
        if len(params) != len(spec):
            raise DomainError(
                f"{self.family} takes {len(spec)} parameters, got {len(params)}")
        for (name, kind), v in zip(spec, params):
            ok = np.isfinite(v)
            if kind == "positive":
                ok = ok and v > 0
            elif kind == "probability":
                ok = ok and 0 < v < 1
            if not ok:
                raise DomainError(f"{self.family} parameter {name}={v} out of domain")
        object.__setattr__(self, "params", params)
        if self.family == "empirical":
            if len(self.sample) == 0:
                raise DomainError("empirical margin needs a non-empty sample")
            object.__setattr__(self, "sample", tuple(sorted(float(s) for s in self.sample)))

    @property
    def discrete(self):
        return self.family in DISCRETE

    @property
    def n_free(self):
        return len(FAMILIES[self.family])

    @property
    def param_names(self):
        return tuple(name for name, _ in FAMILIES[self.family])

    # -- unconstrained parameterisation --------------------------------
    def to_free(self):
        return np.array([_to_free(kind, v)
                         for (_, kind), v in zip(FAMILIES[self.family], self.params)])

    def with_free(self, eta):
        spec = FAMILIES[self.family]
        vals = tuple(float(_from_free(kind, e)) for (_, kind), e in zip(spec, eta))
        return MarginSpec(self.family, vals, self.sample)

    def log_prior_free(self, eta):
        """Independent normal log prior on the unconstrained parameters."""
        out = 0.0
        for (_, kind), e in zip(FAMILIES[self.family], eta):
            var = PRIOR_VARIANCE[kind]
            out += -0.5 * e * e / var - 0.5 * np.log(2 * np.pi * var)
        return out

    # -- distribution functions -----------------------------------------
    def cdf(self, y):
        y = np.asarray(y, dtype=float)
        f, p = self.family, self.params
        if f == "normal":
            out = norm_cdf((y - p[0]) / p[1])
        elif f == "studentt":
            out = sc.stdtr(p[2], (y - p[0]) / p[1])
        elif f == "empirical":
            s = np.asarray(self.sample)
            out = np.searchsorted(s, y, side="right") / (len(s) + 1.0)
        else:
            k = np.floor(y)
            kk = np.maximum(k, 0.0)
            if f == "bernoulli":
                out = np.where(kk >= 1, 1.0, 1.0 - p[0])
            elif f == "poisson":
                out = sc.pdtr(kk, p[0])
            else:
                out = sc.betainc(p[0], kk + 1.0, p[1])
            out = np.where(k < 0, 0.0, out)
        return out if out.ndim else float(out)

    def cdf_left(self, y):
        """Left-hand limit F(y-); equals F(y - 1) for the integer-valued families."""
        if not self.discrete:
            return self.cdf(y)
        return self.cdf(np.asarray(y, dtype=float) - 1.0)

    def log_density(self, y):
        y = np.asarray(y, dtype=float)
        f, p = self.family, self.params
        with np.errstate(divide="ignore"):
            if f == "normal":
                z = (y - p[0]) / p[1]
                out = -0.5 * z * z - np.log(p[1]) - 0.5 * np.log(2 * np.pi)
            elif f == "studentt":
                mu, s, nu = p
                z = (y - mu) / s
                out = (sc.gammaln((nu + 1) / 2) - sc.gammaln(nu / 2)
                       - 0.5 * np.log(nu * np.pi) - np.log(s)
                       - (nu + 1) / 2 * np.log1p(z * z / nu))
            elif f == "empirical":
                s = np.asarray(self.sample)
                cnt = (np.searchsorted(s, y, side="right")
                       - np.searchsorted(s, y, side="left"))
                out = np.log(cnt / len(s))
            else:
                integer = (y == np.floor(y)) & (y >= 0)
                k = np.where(integer, y, 0.0)
                if f == "bernoulli":
                    out = np.where(k == 1, np.log(p[0]),
                                   np.where(k == 0, np.log1p(-p[0]), -np.inf))
                elif f == "poisson":
                    out = k * np.log(p[0]) - p[0] - sc.gammaln(k + 1)
                else:
                    r, q = p
                    out = (sc.gammaln(k + r) - sc.gammaln(r) - sc.gammaln(k + 1)
                           + r * np.log(q) + k * np.log1p(-q))
                out = np.where(integer, out, -np.inf)
        return out if out.ndim else float(out)

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        if np.any((u <= 0) | (u >= 1)):
            raise DomainError("quantile needs u in (0, 1)")
        f, p = self.family, self.params
        if f == "normal":
            out = p[0] + p[1] * norm_ppf(u)
        elif f == "studentt":
            out = p[0] + p[1] * sc.stdtrit(p[2], u)
        elif f == "empirical":
            s = np.asarray(self.sample)
            n = len(s)
            # cdf at the k-th order statistic (1-based, counting ties) is k/(n+1)
            k = np.ceil(u * (n + 1.0) - 1e-12).astype(int)
            out = s[np.clip(k, 1, n) - 1]
        elif f == "bernoulli":
            out = np.where(u > 1.0 - p[0], 1.0, 0.0)
        else:
            out = self._discrete_quantile(u)
        return out if out.ndim else float(out)

    def _discrete_quantile(self, u):
        # Smallest integer y >= 0 with cdf(y) >= u: exponential bracketing then bisection.
        u = np.atleast_1d(u)
        hi = np.ones_like(u)
        while True:
            short = self.cdf(hi) < u
            if not np.any(short):
                break
            hi = np.where(short, 2 * hi, hi)
        lo = np.full_like(u, -1.0)
        while np.any(hi - lo > 1):
            mid = np.floor((lo + hi) / 2)
            ge = self.cdf(mid) >= u
            hi = np.where(ge, mid, hi)
            lo = np.where(ge, lo, mid)
        return hi

    def moment_fit(self, y):
        """Initial parameter values from sample moments of ``y``."""
        y = np.asarray(y, dtype=float)
        f = self.family
        mean = float(np.mean(y))
        sd = float(np.std(y)) or 1.0
        if f == "normal":
            vals = (mean, sd)
        elif f == "studentt":
            vals = (mean, sd * np.sqrt(3.0 / 5.0), 5.0)
        elif f == "bernoulli":
            vals = (float(np.clip(mean, 1e-3, 1 - 1e-3)),)
        elif f == "poisson":
            vals = (max(mean, 1e-3),)
        elif f == "negbinomial":
            mean = max(mean, 1e-3)
            var = sd * sd
            if var > mean * 1.01:
                p = mean / var
                r = mean * p / (1 - p)
            else:
                r, p = 100.0, 100.0 / (100.0 + mean)
            vals = (r, float(np.clip(p, 1e-3, 1 - 1e-3)))
        else:
            return self
        return MarginSpec(f, vals, self.sample)


def empirical_margin(y):
    return MarginSpec("empirical", (), tuple(np.asarray(y, dtype=float)))
