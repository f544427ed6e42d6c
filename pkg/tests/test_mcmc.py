import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import special as sc, stats

from bayescopula.corr_param import indicator_conditional, lambda_log_prior
from bayescopula.mcmc import (BoundedRW, GaussianRW, ProposalError, TProposal,
                              build_t_proposal, find_mode, mh_independence_step,
                              regularised_scale, spike_slab_step)
from bayescopula.special import norm_cdf


def test_quadratic_target():
    a = np.array([1.0, -2.0, 0.5])
    A = np.array([[2.0, 0.5, 0.1], [0.5, 1.0, 0.3], [0.1, 0.3, 3.0]])
    prop = build_t_proposal(lambda t: -0.5 * (t - a) @ A @ (t - a), np.zeros(3))
    assert_allclose(prop.mode, a, atol=1e-6)
    assert_allclose(prop.scale, np.linalg.inv(A), rtol=1e-4)
    assert prop.df == 5.0


def test_beta_logit_modes():
    # Beta(3, 2) density in p, written as a function of eta = logit(p)
    def dens_in_p(eta):
        p = sc.expit(eta[0] if np.ndim(eta) else eta)
        return 2 * np.log(p) + np.log1p(-p)

    # the same density transformed to eta, Jacobian p(1 - p) included
    def dens_in_eta(eta):
        e = eta[0]
        return dens_in_p(eta) + np.log(sc.expit(e)) + np.log(sc.expit(-e))

    assert_allclose(find_mode(dens_in_p, [0.0])[0], sc.logit(2 / 3), atol=1e-6)
    assert_allclose(find_mode(dens_in_eta, [0.0])[0], sc.logit(3 / 5), atol=1e-6)
    grid = np.linspace(-3, 3, 600001)
    p = sc.expit(grid)
    assert abs(grid[np.argmax(2 * np.log(p) + np.log1p(-p))] - sc.logit(2 / 3)) < 2e-5


def test_flat_direction_regularised():
    prop = build_t_proposal(lambda t: -0.5 * t[0] ** 2, np.array([0.3, 0.2]))
    assert np.all(np.linalg.eigvalsh(prop.scale) > 0)
    assert np.isfinite(prop.logpdf(np.array([1.0, 5.0])))
    w = np.linalg.eigvalsh(regularised_scale(-np.diag([-1.0, 0.0])))
    assert_allclose(w.max(), 1e8)


def test_non_finite_start():
    with pytest.raises(ProposalError, match="margin 2"):
        build_t_proposal(lambda t: -np.inf, np.array([-1.0]), name="margin 2")


def test_target_with_wall():
    # log target finite only for t > 0; the search must not step across the wall
    prop = build_t_proposal(lambda t: 3 * np.log(t[0]) - t[0] if t[0] > 0 else -np.inf,
                            np.array([10.0]))
    assert_allclose(prop.mode, [3.0], atol=1e-5)
    assert_allclose(prop.scale, [[3.0]], rtol=1e-4)


def test_t_logpdf_matches_scipy():
    mode = np.array([0.5, -1.0])
    scale = np.array([[2.0, 0.3], [0.3, 0.5]])
    prop = TProposal(mode, scale, 7.0)
    x = np.array([1.3, 0.2])
    ref = stats.multivariate_t(mode, scale, df=7.0).logpdf(x)
    assert_allclose(prop.logpdf(x), ref, rtol=1e-12)


def test_independence_step_exact_proposal():
    prop = TProposal(np.array([1.0]), np.array([[0.4]]), 5.0)
    rng = np.random.default_rng(0)
    theta = np.array([1.0])
    logp = prop.logpdf(theta)
    acc = 0
    for _ in range(2000):
        theta, logp, a = mh_independence_step(theta, logp, prop.logpdf, prop, rng)
        acc += a
    assert acc == 2000


def test_independence_step_rejects_minus_inf():
    prop = TProposal(np.array([0.0]), np.array([[1.0]]), 5.0)
    theta = np.array([0.1])
    out = mh_independence_step(theta, 0.0, lambda t: -np.inf, prop, np.random.default_rng(1))
    assert out[0] is theta and not out[2]


def test_independence_step_mean():
    # logistic target: mean 0.7, heavier tails than a normal
    def target(t):
        z = t[0] - 0.7
        return -z - 2 * np.log1p(np.exp(-z))

    prop = build_t_proposal(target, np.array([0.0]))
    rng = np.random.default_rng(2)
    theta = np.array([0.0])
    logp = target(theta)
    draws = []
    for _ in range(20000):
        theta, logp, _ = mh_independence_step(theta, logp, target, prop, rng)
        draws.append(theta[0])
    se = np.pi / np.sqrt(3) / np.sqrt(len(draws)) * 2
    assert abs(np.mean(draws) - 0.7) < 4 * se


def test_kappa_values():
    rw = BoundedRW(1e-6)
    new, lk = rw.propose(0.0, np.random.default_rng(3))
    assert abs(new) < 1e-4 and abs(lk) < 1e-12
    # kappa from the printed CDF differences at old=0.99, new=0.98
    s = 0.01
    num = norm_cdf((1 - 0.99) / s) - norm_cdf((-1 - 0.99) / s)
    den = norm_cdf((1 - 0.98) / s) - norm_cdf((-1 - 0.98) / s)
    assert num / den < 1
    assert_allclose(num / den, 0.8413447460685429 / 0.9772498680518208, rtol=1e-12)


def test_kappa_is_a_ratio():
    rw = BoundedRW(0.05)
    rng = np.random.default_rng(4)
    for old in [0.97, -0.99, 0.2]:
        new, lk = rw.propose(old, rng)
        _, back = BoundedRW(0.05).propose(new, _FixedRng(old, new, 0.05))
        assert_allclose(lk + back, 0.0, atol=1e-12)
        assert -1 < new < 1


class _FixedRng:
    """Generator stand-in whose single uniform reproduces a chosen truncated normal draw."""

    def __init__(self, target, centre, s):
        a, b = norm_cdf((-1 - centre) / s), norm_cdf((1 - centre) / s)
        self.u = (norm_cdf((target - centre) / s) - a) / (b - a)

    def random(self, size=None):
        return self.u if size is None else np.full(size, self.u)


def test_spike_slab_zero_to_zero_makes_no_call():
    def boom(v, g):
        raise AssertionError("likelihood evaluated")

    rng = np.random.default_rng(5)
    for _ in range(200):
        # select=False holds gamma at 0, so every step is a 0 -> 0 move
        out = spike_slab_step(0.3, 0, -7.0, boom, lambda v: 0.0, BoundedRW(0.01),
                              0.5, 0.5, rng, select=False)
        assert out[1] == 0 and out[2] == -7.0 and out[3] and out[4] == 0


def test_spike_slab_flat_likelihood_prior_inclusion():
    d0, d1 = indicator_conditional(2, 3)
    rng = np.random.default_rng(6)
    v, g, ll = 0.0, 0, 0.0
    hits = 0
    n = 100_000
    for _ in range(n):
        v, g, ll, _, _ = spike_slab_step(v, g, ll, lambda x, k: 0.0, lambda_log_prior,
                                         BoundedRW(0.01), d0, d1, rng)
        hits += g
    assert abs(hits / n - d1) < 0.02


def test_spike_slab_fixed_indicator_is_plain_mh():
    rng = np.random.default_rng(7)
    v, g, ll = 0.0, 1, 0.0
    draws = np.empty(40000)
    for i in range(len(draws)):
        v, g, ll, _, _ = spike_slab_step(v, g, ll, lambda x, k: -0.5 * x * x, lambda x: 0.0,
                                         GaussianRW(1.5), 0.5, 0.5, rng, select=False)
        draws[i] = v
    assert g == 1
    assert abs(draws.mean()) < 0.05 and abs(draws.var() - 1) < 0.05
