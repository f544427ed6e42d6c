"""Numerical building blocks shared by the copula code.

Standard normal CDF/quantile, the bivariate normal CDF, the first-order
Debye function, and a truncated-normal sampler that stays accurate in the
far tails.
"""
import numpy as np
from scipy import special as sc

EPS_U = 1e-12

_SQRT_2PI = np.sqrt(2.0 * np.pi)


def norm_cdf(x):
    return sc.ndtr(x)


def norm_ppf(u):
    """Standard normal quantile. Returns -inf/inf at 0/1 (no clamping)."""
    return sc.ndtri(u)


def clamp_unit(u):
    """Clamp probabilities into [EPS_U, 1 - EPS_U] before taking logs or quantiles."""
    return np.clip(u, EPS_U, 1.0 - EPS_U)


def norm_scores(u):
    """Phi^{-1}(u) with the boundary guard applied."""
    return sc.ndtri(clamp_unit(u))


def log_ndtr_diff(a, b):
    """log(Phi(b) - Phi(a)) for a <= b, accurate in both tails.

    Returns -inf where the interval is empty.
    """
    a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    flip = a > 0
    lo = np.where(flip, -b, a)
    hi = np.where(flip, -a, b)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_hi = sc.log_ndtr(hi)
        log_lo = sc.log_ndtr(lo)
        out = log_hi + np.log1p(-np.exp(log_lo - log_hi))
    out = np.where(hi <= lo, -np.inf, out)
    return out if out.ndim else float(out)


# Gauss-Legendre nodes/weights on [-1, 1] (half sets) used by Genz's BVN method.
_GL = {
    6: (np.array([0.9324695142031522, 0.6612093864662647, 0.2386191860831970]),
        np.array([0.1713244923791705, 0.3607615730481384, 0.4679139345726904])),
    12: (np.array([0.9815606342467191, 0.9041172563704750, 0.7699026741943050,
                   0.5873179542866171, 0.3678314989981802, 0.1252334085114692]),
         np.array([0.04717533638651177, 0.1069393259953183, 0.1600783285433464,
                   0.2031674267230659, 0.2334925365383547, 0.2491470458134029])),
    20: (np.array([0.9931285991850949, 0.9639719272779138, 0.9122344282513259,
                   0.8391169718222188, 0.7463319064601508, 0.6360536807265150,
                   0.5108670019508271, 0.3737060887154196, 0.2277858511416451,
                   0.07652652113349733]),
         np.array([0.01761400713915212, 0.04060142980038694, 0.06267204833410906,
                   0.08327674157670475, 0.1019301198172404, 0.1181945319615184,
                   0.1316886384491766, 0.1420961093183821, 0.1491729864726037,
                   0.1527533871307259])),
}


def _bvnu_scalar(dh, dk, r):
    # Upper orthant probability P(X > dh, Y > dk) for corr r (Genz 2004).
    if dh == np.inf or dk == np.inf:
        return 0.0
    if dh == -np.inf:
        return 1.0 if dk == -np.inf else float(sc.ndtr(-dk))
    if dk == -np.inf:
        return float(sc.ndtr(-dh))
    if r == 0.0:
        return float(sc.ndtr(-dh) * sc.ndtr(-dk))
    tp = 2.0 * np.pi
    h, k = dh, dk
    hk = h * k
    ar = abs(r)
    ng = 6 if ar < 0.3 else (12 if ar < 0.75 else 20)
    xh, wh = _GL[ng]
    x = np.concatenate([1.0 - xh, 1.0 + xh])
    w = np.concatenate([wh, wh])
    if ar < 0.925:
        hs = (h * h + k * k) / 2.0
        asr = np.arcsin(r) / 2.0
        sn = np.sin(asr * x)
        bvn = np.dot(np.exp((sn * hk - hs) / (1.0 - sn * sn)), w)
        bvn = bvn * asr / tp + sc.ndtr(-h) * sc.ndtr(-k)
    else:
        if r < 0:
            k = -k
            hk = -hk
        bvn = 0.0
        if ar < 1.0:
            as_ = 1.0 - r * r
            a = np.sqrt(as_)
            bs = (h - k) ** 2
            asr = -(bs / as_ + hk) / 2.0
            c = (4.0 - hk) / 8.0
            d = (12.0 - hk) / 80.0
            if asr > -100:
                bvn = a * np.exp(asr) * (1 - c * (bs - as_) * (1 - d * bs) / 3 + c * d * as_ * as_)
            if hk > -100:
                b = np.sqrt(bs)
                sp = np.sqrt(tp) * sc.ndtr(-b / a)
                bvn = bvn - np.exp(-hk / 2) * sp * b * (1 - c * bs * (1 - d * bs) / 3)
            a = a / 2.0
            xs = (a * x) ** 2
            asr = -(bs / xs + hk) / 2.0
            ix = asr > -100
            xs = xs[ix]
            sp = 1 + c * xs * (1 + 5 * d * xs)
            rs = np.sqrt(1 - xs)
            ep = np.exp(-(hk / 2) * xs / (1 + rs) ** 2) / rs
            bvn = (a * np.dot(np.exp(asr[ix]) * (sp - ep), w[ix]) - bvn) / tp
        if r > 0:
            bvn = bvn + sc.ndtr(-max(h, k))
        elif h >= k:
            bvn = -bvn
        else:
            if h < 0:
                L = sc.ndtr(k) - sc.ndtr(h)
            else:
                L = sc.ndtr(-h) - sc.ndtr(-k)
            bvn = L - bvn
    return float(min(1.0, max(0.0, bvn)))


def bvn_cdf(h, k, r):
    """Bivariate standard normal CDF P(X <= h, Y <= k) with correlation r.

    Uses Genz's Gauss-Legendre scheme (double precision). Arguments
    broadcast; infinite limits are allowed.
    """
    h, k, r = np.broadcast_arrays(np.asarray(h, dtype=float),
                                  np.asarray(k, dtype=float),
                                  np.asarray(r, dtype=float))
    out = np.empty(h.shape)
    for idx in np.ndindex(h.shape):
        out[idx] = _bvnu_scalar(-h[idx], -k[idx], r[idx])
    return out if out.ndim else float(out)


def _debye_integrand(t):
    t = np.asarray(t, dtype=float)
    small = np.abs(t) < 1e-4
    ts = np.where(small, 1.0, t)
    out = ts / np.expm1(ts)
    series = 1.0 - t / 2.0 + t * t / 12.0
    return np.where(small, series, out)


_GL40 = np.polynomial.legendre.leggauss(40)


def debye1(phi):
    """First-order Debye function D1(phi) = (1/phi) int_0^phi t/(e^t - 1) dt.

    Composite Gauss-Legendre on panels of width <= 2; D1(0) = 1.
    """
    phi = float(phi)
    if phi == 0.0:
        return 1.0
    if phi < 0.0:
        return debye1(-phi) - phi / 2.0
    npan = max(1, int(np.ceil(phi / 2.0)))
    edges = np.linspace(0.0, phi, npan + 1)
    nodes, weights = _GL40
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        half = 0.5 * (hi - lo)
        t = lo + half * (nodes + 1.0)
        total += half * np.dot(weights, _debye_integrand(t))
    return total / phi


def truncnorm_rvs(lower, upper, mean, sd, rng):
    """Draw from N(mean, sd^2) truncated to [lower, upper).

    One uniform per element for the inverse-CDF route; elements whose
    interval sits beyond 6 standard deviations switch to rejection from a
    truncated exponential proposal.
    """
    lower, upper, mean, sd = np.broadcast_arrays(
        np.asarray(lower, dtype=float), np.asarray(upper, dtype=float),
        np.asarray(mean, dtype=float), np.asarray(sd, dtype=float))
    a = (lower - mean) / sd
    b = (upper - mean) / sd
    if np.any(~(a < b)):
        raise ValueError("empty truncation interval")
    u = rng.random(a.shape)
    flip = a > 0
    lo = np.where(flip, -b, a)
    hi = np.where(flip, -a, b)
    tail = hi < -6.0
    z = np.empty(a.shape)
    body = ~tail
    if np.any(body):
        pa = sc.ndtr(lo[body])
        pb = sc.ndtr(hi[body])
        z[body] = sc.ndtri(pa + u[body] * (pb - pa))
    zf, lof, hif = z.reshape(-1), lo.reshape(-1), hi.reshape(-1)
    for i in np.flatnonzero(tail):
        zf[i] = -_tail_exp_rejection(-hif[i], -lof[i], rng)
    z = np.clip(z, lo, hi)
    z = np.where(flip, -z, z)
    x = mean + sd * z
    x = np.minimum(np.maximum(x, lower), np.nextafter(upper, -np.inf))
    return x if x.ndim else float(x)


def _tail_exp_rejection(alpha, beta, rng):
    # Sample N(0,1) restricted to [alpha, beta], alpha > 6.
    width = beta - alpha
    span = -np.expm1(-alpha * width) if np.isfinite(width) else 1.0
    while True:
        e = -np.log1p(-rng.random() * span) / alpha
        if rng.random() <= np.exp(-0.5 * e * e):
            return alpha + e
