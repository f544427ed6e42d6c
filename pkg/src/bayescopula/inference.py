"""Posterior summaries computed from streams of sweep records.

Point estimates are iterate averages; probability intervals come from
ranking the iterates.  Dependence measures that have no closed form are
estimated by drawing from the copula at each retained iterate.
"""
from dataclasses import dataclass, field

import numpy as np

from . import corr_param as cp
from .dvine import DVine
from .gaussian_copula import GaussianCopula
from .pair_copulas import PairCopula

NESTING = ("gaussian", "frank", "clayton")


class EmptySummaryError(ValueError):
    """No iterates are left after burn-in and thinning."""


def retained(records, burn_in=0, thin=1):
    """Records with sweep index >= burn_in, keeping every ``thin``-th one."""
    return [r for r in records if r.sweep >= burn_in and (r.sweep - burn_in) % thin == 0]


def _select(records, selector):
    if not records:
        raise EmptySummaryError("no retained iterates to summarise")
    if callable(selector):
        vals = [selector(r) for r in records]
    elif selector == "corr":
        vals = [cp.corr_from_vector(r.corr) for r in records]
    elif selector.startswith("theta"):
        j = int(selector.split(":")[1])
        vals = [r.theta[j] for r in records]
    else:
        vals = [getattr(r, selector) for r in records]
    return np.asarray(vals, dtype=float)


def posterior_mean(records, selector):
    """Average of the selected component over the iterates.

    ``selector`` is a callable on a record or one of ``"copula"``,
    ``"gamma"``, ``"corr"`` (returns a matrix), ``"theta:j"``, ``"loglik"``.
    """
    return np.mean(_select(records, selector), axis=0)


def probability_interval(records, selector, level=0.1):
    """Central interval with probability ``1 - level`` by ranking.

    Drops ``floor(level * J / 2)`` iterates from each end of the sorted
    values and returns the extremes of what remains.
    """
    vals = _select(records, selector)
    J = len(vals)
    need = int(np.ceil(2.0 / level))
    if J < need:
        raise EmptySummaryError(f"need at least {need} iterates for level {level}, have {J}")
    drop = int(np.floor(level * J / 2.0))
    s = np.sort(vals, axis=0)
    return s[drop], s[J - 1 - drop]


def inclusion_probability(records, pair):
    """Fraction of iterates with ``gamma[t, s] = 1`` for ``pair = (t, s)``, t > s."""
    t, s = pair
    m = cp.dim_from_pairs(len(records[0].gamma)) if records else None
    if not records:
        raise EmptySummaryError("no retained iterates to summarise")
    if not (0 <= s < t < m):
        raise ValueError(f"pair {pair} is not a valid (t, s) with t > s for dimension {m}")
    k = cp.pair_index(m).index((t, s))
    return float(np.mean([r.gamma[k] for r in records]))


def model_averaged_corr(records):
    """Element-wise mean of the per-iterate correlation matrices."""
    return posterior_mean(records, "corr")


def batch_means_se(x, batches=20):
    """Monte Carlo standard error of the mean of a correlated series."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    if n < 2:
        return float("nan")
    b = min(batches, n)
    size = n // b
    means = x[: b * size].reshape(b, size).mean(axis=1)
    return float(np.std(means, ddof=1) / np.sqrt(b))


# ---------------------------------------------------------------- models
def copula_models(records, copula, family="gaussian", dim=None):
    """One copula object per record; None stands for the independence copula."""
    out = []
    for r in records:
        if copula == "independence":
            out.append(None)
        elif copula == "gaussian" or (copula == "dvine" and family == "gaussian"):
            # a Gaussian-family D-vine is the Gaussian copula with Gamma(Lambda)
            out.append(GaussianCopula(cp.corr_from_vector(r.corr)))
        elif copula == "dvine":
            m = dim if dim is not None else cp.dim_from_pairs(len(r.gamma))
            if m == 2:
                out.append(PairCopula(family, float(r.latent_copula[0])) if r.gamma[0] else None)
            else:
                out.append(DVine(family, r.latent_copula, r.gamma, dim=m))
        else:
            raise ValueError(f"unknown copula type {copula!r}")
    return out


def _sample(model, n, m, rng):
    if model is None:
        return rng.random((n, m))
    if isinstance(model, PairCopula):
        return model.sample(n, rng)
    return model.sample_u(n, rng)


def _pair_cdf(model, i, k, ui, uk, rng, k_inner):
    # returns (C(ui, uk), exact?)
    if model is None:
        return ui * uk, True
    if isinstance(model, GaussianCopula):
        return model.bivariate_margin_cdf(min(i, k), max(i, k),
                                          ui if i < k else uk, uk if i < k else ui), True
    if isinstance(model, PairCopula):
        return model.cdf(ui, uk) if i < k else model.cdf(uk, ui), True
    v = model.sample_u(k_inner, rng)
    below = (v[:, i][:, None] <= ui[None, :]) & (v[:, k][:, None] <= uk[None, :])
    return below.mean(axis=0), False


def _closed_form_tau(model, pair):
    # tau per iterate when the bivariate margin is a single pair-copula
    t, s = pair
    if model is None:
        return 0.0
    if isinstance(model, PairCopula):
        return model.dependence()["tau"]
    if isinstance(model, DVine) and t == s + 1:
        pc = model.pair(t, s)
        return 0.0 if pc is None else pc.dependence()["tau"]
    return None


def dependence_by_simulation(models, pairs, rng, dim, draws=1, k_inner=256, batches=20):
    """Kendall's tau and Spearman's rho from per-iterate copula draws.

    For each model ``draws`` vectors U are simulated; tau is estimated as
    ``4 E[C(U_i, U_k)] - 1`` and rho_S as ``12 E[U_i U_k] - 3``.  The
    bivariate CDF is exact for Gaussian and pair-copula models and is
    replaced by an inner sample of size ``k_inner`` for D-vines (reported
    as ``approximate``).  Standard errors are batch means over iterates.
    Where tau has a closed form for every iterate, a 90% interval of the
    per-iterate values is added.
    """
    models = list(models)
    if not models:
        raise EmptySummaryError("no retained iterates to summarise")
    J = len(models)
    cb = {p: np.empty(J) for p in pairs}
    uu = {p: np.empty(J) for p in pairs}
    exact = {p: True for p in pairs}
    for j, model in enumerate(models):
        U = _sample(model, draws, dim, rng)
        for p in pairs:
            t, s = p
            c, ex = _pair_cdf(model, t, s, U[:, t], U[:, s], rng, k_inner)
            cb[p][j] = np.mean(c)
            uu[p][j] = np.mean(U[:, t] * U[:, s])
            exact[p] = exact[p] and ex
    table = {}
    for p in pairs:
        row = {
            "tau": float(4.0 * np.mean(cb[p]) - 1.0),
            "tau_se": 4.0 * batch_means_se(cb[p], batches),
            "rho_s": float(12.0 * np.mean(uu[p]) - 3.0),
            "rho_s_se": 12.0 * batch_means_se(uu[p], batches),
            "approximate": not exact[p],
        }
        taus = [_closed_form_tau(mo, p) for mo in models]
        if all(tv is not None for tv in taus) and J >= 20:
            lo, hi = _interval(np.asarray(taus), 0.1)
            row["tau_closed_form_mean"] = float(np.mean(taus))
            row["tau_interval"] = (float(lo), float(hi))
        table[p] = row
    return table


def _interval(vals, level):
    J = len(vals)
    drop = int(np.floor(level * J / 2.0))
    s = np.sort(vals)
    return s[drop], s[J - 1 - drop]


def tail_dependence_curves(models, pair, alphas, rng, dim, draws=100):
    """Empirical lambda_up(alpha) = P(U_t > alpha | U_s > alpha) and the lower analogue.

    Draws are pooled over the iterates.  When the bivariate margin is a
    single pair-copula at every iterate, the posterior means of the
    limiting tail coefficients are attached.
    """
    models = list(models)
    if not models:
        raise EmptySummaryError("no retained iterates to summarise")
    t, s = pair
    U = np.vstack([_sample(mo, draws, dim, rng) for mo in models])
    a, b = U[:, t], U[:, s]
    alphas = np.asarray(alphas, dtype=float)
    if np.any((alphas <= 0) | (alphas >= 1)):
        raise ValueError("alphas must lie in (0, 1)")
    up = np.array([np.mean(a[b > al] > al) if np.any(b > al) else np.nan for al in alphas])
    low = np.array([np.mean(a[b < al] < al) if np.any(b < al) else np.nan for al in alphas])
    out = {"alpha": alphas, "upper": up, "lower": low}
    limits = []
    for mo in models:
        pc = None
        if isinstance(mo, PairCopula):
            pc = mo
        elif isinstance(mo, DVine) and t == s + 1:
            pc = mo.pair(t, s)
            if pc is None:
                pc = PairCopula("independence")
        elif mo is None:
            pc = PairCopula("independence")
        if pc is None:
            limits = None
            break
        d = pc.dependence()
        limits.append((d["lambda_low"], d["lambda_up"]))
    if limits:
        lim = np.mean(limits, axis=0)
        out["limit_lower"], out["limit_upper"] = float(lim[0]), float(lim[1])
    return out


# --------------------------------------------------------------- summary
@dataclass
class PosteriorSummary:
    """Posterior means and intervals for one chain (or a pooled set)."""

    n_retained: int
    level: float
    margins: list = field(default_factory=list)
    copula: list = field(default_factory=list)
    corr_mean: list = None
    acceptance: list = None
    dependence: dict = None
    notes: list = field(default_factory=list)

    def to_dict(self):
        return {
            "n_retained": self.n_retained, "level": self.level, "margins": self.margins,
            "copula": self.copula, "corr_mean": self.corr_mean,
            "acceptance": self.acceptance, "dependence": self.dependence,
            "notes": self.notes,
        }


def _safe_interval(vals, level):
    vals = np.asarray(vals, dtype=float)
    if len(vals) < int(np.ceil(2.0 / level)):
        return None
    lo, hi = _interval(vals, level)
    return [float(lo), float(hi)]


def summarize(records, margin_families, margin_params, copula, family="gaussian",
              selection=False, level=0.1):
    """Collect the standard summary tables from retained records.

    ``margin_params`` lists parameter names per margin.  For pair families
    that do not contain independence (Gumbel), parameter means are taken
    over iterates with the pair included and flagged as conditional.
    """
    J = len(records)
    out = PosteriorSummary(n_retained=J, level=level)
    if J == 0:
        out.notes.append("no iterates retained after burn-in")
        return out
    for j, (fam, names) in enumerate(zip(margin_families, margin_params)):
        th = _select(records, f"theta:{j}")
        for q, name in enumerate(names):
            out.margins.append({"margin": j, "family": fam, "param": name,
                                "mean": float(th[:, q].mean()),
                                "interval": _safe_interval(th[:, q], level)})
    if copula != "independence":
        m = cp.dim_from_pairs(len(records[0].gamma))
        lat = _select(records, "latent_copula")
        gam = _select(records, "gamma")
        eff = _select(records, "copula")
        conditional = copula == "dvine" and family not in NESTING
        for k, (t, s) in enumerate(cp.pair_index(m)):
            if conditional:
                inc = gam[:, k] == 1
                vals = lat[inc, k]
            else:
                vals = eff[:, k]
            row = {"pair": [t, s],
                   "mean": float(np.mean(vals)) if len(vals) else None,
                   "interval": _safe_interval(vals, level) if len(vals) else None}
            if selection:
                row["inclusion"] = float(gam[:, k].mean())
            if conditional:
                row["conditional_on_inclusion"] = True
            out.copula.append(row)
        if conditional:
            out.notes.append(f"{family} pair parameters are undefined when excluded; "
                             "means are conditional on inclusion")
        if records[0].corr is not None:
            out.corr_mean = model_averaged_corr(records).tolist()
    out.acceptance = np.mean(_select(records, "accepted"), axis=0).tolist()
    return out


__all__ = ["retained", "posterior_mean", "probability_interval", "inclusion_probability",
           "model_averaged_corr", "batch_means_se", "copula_models",
           "dependence_by_simulation", "tail_dependence_curves", "summarize",
           "PosteriorSummary", "EmptySummaryError"]
