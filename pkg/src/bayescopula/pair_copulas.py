"""Bivariate copula families used as stand-alone copulas and as D-vine pair-copulas.

All functions broadcast over ``u1``/``u2`` arrays.  ``h(u1 | u2)`` is the
conditional distribution function ``dC/du2``; the families here are all
exchangeable, so the same h serves both conditioning directions.
"""
from dataclasses import dataclass

import numpy as np

from .margins import DomainError
from .special import EPS_U, bvn_cdf, clamp_unit, debye1, norm_cdf, norm_ppf, norm_scores

FAMILIES = ("independence", "gaussian", "frank", "clayton", "gumbel")


@dataclass(frozen=True)
class PairCopula:
    family: str
    phi: float = None

    def __post_init__(self):
        f, phi = self.family, self.phi
        if f not in FAMILIES:
            raise DomainError(f"unknown pair-copula family {f!r}")
        if f == "independence":
            if phi is not None:
                raise DomainError("independence copula has no parameter")
            return
        if phi is None or not np.isfinite(phi):
            raise DomainError(f"{f} copula needs a finite parameter phi")
        phi = float(phi)
        ok = {
            "gaussian": -1.0 < phi < 1.0,
            "frank": phi != 0.0,
            "clayton": phi > -1.0 and phi != 0.0,
            "gumbel": phi >= 1.0,
        }[f]
        if not ok:
            raise DomainError(f"{f} parameter phi={phi} out of domain")
        object.__setattr__(self, "phi", phi)

    # ------------------------------------------------------------------
    def cdf(self, u1, u2):
        u1 = np.asarray(u1, dtype=float)
        u2 = np.asarray(u2, dtype=float)
        f, phi = self.family, self.phi
        if f == "independence":
            out = u1 * u2
        elif f == "gaussian":
            out = bvn_cdf(norm_ppf(u1), norm_ppf(u2), phi)
        else:
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                if f == "frank":
                    num = np.expm1(-phi * u1) * np.expm1(-phi * u2)
                    out = -np.log1p(num / np.expm1(-phi)) / phi
                elif f == "clayton":
                    s = np.expm1(-phi * np.log(u1)) + np.expm1(-phi * np.log(u2))
                    out = np.where(1.0 + s > 0, np.exp(-np.log1p(s) / phi), 0.0)
                else:
                    t = (-np.log(u1)) ** phi + (-np.log(u2)) ** phi
                    out = np.exp(-t ** (1.0 / phi))
            out = np.where((u1 <= 0) | (u2 <= 0), 0.0, out)
            out = np.where(u1 >= 1, u2, np.where(u2 >= 1, u1, out))
        out = np.asarray(out, dtype=float)
        return out if out.ndim else float(out)

    def log_pdf(self, u1, u2):
        f, phi = self.family, self.phi
        u1 = clamp_unit(np.asarray(u1, dtype=float))
        u2 = clamp_unit(np.asarray(u2, dtype=float))
        if f == "independence":
            out = np.zeros(np.broadcast(u1, u2).shape)
        elif f == "gaussian":
            x1, x2 = norm_ppf(u1), norm_ppf(u2)
            r2 = 1.0 - phi * phi
            out = (-0.5 * np.log(r2)
                   - (phi * phi * (x1 * x1 + x2 * x2) - 2.0 * phi * x1 * x2) / (2.0 * r2))
        elif f == "frank":
            a = -np.expm1(-phi)
            a1 = -np.expm1(-phi * u1)
            a2 = -np.expm1(-phi * u2)
            out = (np.log(phi * a) - phi * (u1 + u2) - 2.0 * np.log(np.abs(a - a1 * a2)))
        elif f == "clayton":
            l1, l2 = np.log(u1), np.log(u2)
            s = np.expm1(-phi * l1) + np.expm1(-phi * l2)
            with np.errstate(invalid="ignore", divide="ignore"):
                out = (np.log1p(phi) - (1.0 + phi) * (l1 + l2)
                       + (-1.0 / phi - 2.0) * np.log1p(s))
            out = np.where(1.0 + s > 0, out, -np.inf)
        else:
            t1, t2 = -np.log(u1), -np.log(u2)
            lt1, lt2 = np.log(t1), np.log(t2)
            w = t1 ** phi + t2 ** phi
            lw = np.log(w)
            wp = np.exp(lw / phi)
            out = (-wp + t1 + t2 + (-2.0 + 2.0 / phi) * lw
                   + (phi - 1.0) * (lt1 + lt2) + np.log1p((phi - 1.0) / wp))
        out = np.asarray(out, dtype=float)
        return out if out.ndim else float(out)

    def pdf(self, u1, u2):
        return np.exp(self.log_pdf(u1, u2))

    def h(self, u1, u2):
        """Conditional CDF of U1 given U2 = u2."""
        f, phi = self.family, self.phi
        u1 = np.asarray(u1, dtype=float)
        if f == "independence":
            out = u1 + 0.0 * np.asarray(u2, dtype=float)
            return out if out.ndim else float(out)
        v1 = clamp_unit(u1)
        v2 = clamp_unit(np.asarray(u2, dtype=float))
        if f == "gaussian":
            out = norm_cdf((norm_ppf(v1) - phi * norm_ppf(v2)) / np.sqrt(1.0 - phi * phi))
        elif f == "frank":
            g1 = np.expm1(-phi * v1)
            g2 = np.expm1(-phi * v2)
            out = np.exp(-phi * v2) * g1 / (np.expm1(-phi) + g1 * g2)
        elif f == "clayton":
            l1, l2 = np.log(v1), np.log(v2)
            s = np.expm1(-phi * l1) + np.expm1(-phi * l2)
            with np.errstate(invalid="ignore", divide="ignore"):
                lg = -(1.0 + phi) * l2 + (-1.0 / phi - 1.0) * np.log1p(s)
                out = np.where(1.0 + s > 0, np.exp(lg), 0.0)
        else:
            t1, t2 = -np.log(v1), -np.log(v2)
            w = t1 ** phi + t2 ** phi
            wp = w ** (1.0 / phi)
            out = np.exp(-wp + t2 + (1.0 / phi - 1.0) * np.log(w) + (phi - 1.0) * np.log(t2))
        out = np.clip(out, 0.0, 1.0)
        out = np.where(u1 <= 0, 0.0, np.where(u1 >= 1, 1.0, out))
        return out if out.ndim else float(out)

    def h_inverse(self, q, u2):
        """Solve ``h(u1 | u2) = q`` for u1."""
        f, phi = self.family, self.phi
        q = np.asarray(q, dtype=float)
        u2 = np.asarray(u2, dtype=float)
        if f == "independence":
            out = q + 0.0 * u2
            return out if out.ndim else float(out)
        qc = clamp_unit(q)
        v2 = clamp_unit(u2)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            if f == "gaussian":
                guess = norm_cdf(norm_ppf(qc) * np.sqrt(1.0 - phi * phi) + phi * norm_ppf(v2))
            elif f == "frank":
                g2 = np.expm1(-phi * v2)
                g1 = qc * np.expm1(-phi) / (np.exp(-phi * v2) - qc * g2)
                guess = -np.log1p(g1) / phi
            elif f == "clayton":
                # base = u1^-phi + u2^-phi - 1 solved from h = q, in log space
                lbase = (-phi / (1.0 + phi)) * (np.log(qc) + (1.0 + phi) * np.log(v2))
                x = np.expm1(lbase) - np.expm1(-phi * np.log(v2))
                guess = np.exp(-np.log1p(x) / phi)
            else:
                guess = _gumbel_h_inverse(phi, qc, v2)
        out = _polish_h_inverse(self, np.broadcast_to(qc, np.broadcast(qc, v2).shape),
                                np.broadcast_to(v2, np.broadcast(qc, v2).shape), guess)
        return out if out.ndim else float(out)

    # -- normal-score interface used by the D-vine recursion -------------
    def log_pdf_scores(self, x1, x2):
        """Log density with both arguments given as normal scores Phi^{-1}(u)."""
        if self.family == "gaussian":
            phi = self.phi
            r2 = 1.0 - phi * phi
            return (-0.5 * np.log(r2)
                    - (phi * phi * (x1 * x1 + x2 * x2) - 2.0 * phi * x1 * x2) / (2.0 * r2))
        return self.log_pdf(norm_cdf(x1), norm_cdf(x2))

    def h_scores(self, x1, x2):
        """h on the normal-score scale: Phi^{-1}(h(Phi(x1) | Phi(x2)))."""
        if self.family == "independence":
            return x1
        if self.family == "gaussian":
            return (x1 - self.phi * x2) / np.sqrt(1.0 - self.phi * self.phi)
        return norm_scores(self.h(norm_cdf(x1), norm_cdf(x2)))

    def sample(self, n, rng):
        """Draw ``n`` pairs: u2 and q uniform, u1 = h_inverse(q, u2)."""
        w = rng.random((n, 2))
        u2 = w[:, 0]
        u1 = self.h_inverse(w[:, 1], u2)
        return np.column_stack([u1, u2])

    # ------------------------------------------------------------------
    def dependence(self):
        """Closed-form Kendall's tau and tail dependence coefficients.

        ``tau`` is None for the Gaussian family (no closed form used here);
        use the simulation estimator in :mod:`bayescopula.inference`.
        """
        f, phi = self.family, self.phi
        if f == "independence":
            return {"tau": 0.0, "lambda_low": 0.0, "lambda_up": 0.0}
        if f == "gaussian":
            return {"tau": None, "lambda_low": 0.0, "lambda_up": 0.0}
        if f == "frank":
            return {"tau": 1.0 + 4.0 / phi * (debye1(phi) - 1.0),
                    "lambda_low": 0.0, "lambda_up": 0.0}
        if f == "clayton":
            # 2^{-1/phi} only applies to positive dependence
            lam = 2.0 ** (-1.0 / phi) if phi > 0 else 0.0
            return {"tau": phi / (phi + 2.0), "lambda_low": lam, "lambda_up": 0.0}
        return {"tau": 1.0 - 1.0 / phi, "lambda_low": 0.0,
                "lambda_up": 2.0 - 2.0 ** (1.0 / phi)}


def _gumbel_h_inverse(phi, q, u2):
    # With t = -log u and z = (t1^phi + t2^phi)^(1/phi), h = q reads
    # z + (phi - 1) log z = t2 + (phi - 1) log t2 - log q.  The left side is
    # concave and increasing, so Newton from z = t2 climbs monotonically to the root.
    q, u2 = np.broadcast_arrays(q, u2)
    t2 = -np.log(u2)
    a = phi - 1.0
    if a == 0.0:
        return np.array(q, dtype=float)
    c = t2 + a * np.log(t2) - np.log(q)
    z = t2.copy()
    for _ in range(100):
        step = (z + a * np.log(z) - c) / (1.0 + a / z)
        z = z - step
        if np.all(np.abs(step) <= 1e-15 * z):
            break
    t1 = np.exp(np.log(np.maximum(z ** phi - t2 ** phi, 0.0)) / phi)
    return np.exp(-t1)


def _polish_h_inverse(cop, q, u2, guess, tol=1e-10):
    # Accept the closed-form root where its residual is small, otherwise bisect.
    u1 = np.array(guess, dtype=float, copy=True)
    bad = ~np.isfinite(u1) | (u1 <= 0) | (u1 >= 1)
    u1[bad] = 0.5
    resid = np.abs(cop.h(u1, u2) - q)
    todo = bad | (resid > tol)
    if not np.any(todo):
        return u1
    qq, vv = q[todo], u2[todo]
    lo = np.zeros(qq.shape)
    hi = np.ones(qq.shape)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        below = cop.h(mid, vv) < qq
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= 1e-16):
            break
    u1[todo] = 0.5 * (lo + hi)
    return u1


def transform_spec(family, allow_negative=False):
    """Map between a pair-copula parameter and the real line for RW proposals.

    Returns ``(to_free, from_free)`` callables.  The Gaussian family is not
    transformed (it uses the bounded random walk on (-1, 1)).
    """
    if family == "gumbel":
        return (lambda p: np.log(p - 1.0)), (lambda e: 1.0 + np.exp(e))
    if family == "clayton":
        if allow_negative:
            return (lambda p: np.log1p(p)), (lambda e: np.expm1(e))
        return (lambda p: np.log(p)), (lambda e: np.exp(e))
    if family == "frank":
        return (lambda p: p), (lambda e: e)
    raise DomainError(f"no unconstrained transform for {family!r}")


def independence_value(family):
    """Parameter value at which the family reduces to independence (phi^+)."""
    return {"gumbel": 1.0, "gaussian": 0.0, "frank": 0.0, "clayton": 0.0}.get(family)


__all__ = ["PairCopula", "FAMILIES", "transform_spec", "independence_value", "EPS_U"]
