import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import integrate, stats

from bayescopula import corr_param as cp
from bayescopula.dvine import DVine
from bayescopula.gaussian_copula import GaussianCopula
from bayescopula.pair_copulas import PairCopula
from bayescopula.special import norm_cdf, norm_ppf


def test_all_excluded():
    u = np.random.default_rng(0).random((4, 4))
    vine = DVine("clayton", np.full(6, 2.0), gamma=np.zeros(6))
    A = vine.evaluate_arguments(u)
    for t, s in cp.pair_index(4):
        assert_allclose(A[t, s], u[:, t], rtol=1e-14)
        assert_allclose(A[s, t], u[:, s], rtol=1e-14)
    assert_allclose(vine.log_density(u), 0.0)


def test_shortcut_skips_excluded_pairs(monkeypatch):
    calls = []
    orig = PairCopula.h_scores

    def counting(self, a, b):
        calls.append(1)
        return orig(self, a, b)

    monkeypatch.setattr(PairCopula, "h_scores", counting)
    u = np.random.default_rng(1).random((3, 4))
    DVine("frank", np.full(6, 3.0), gamma=[1, 0, 0, 0, 0, 0]).evaluate_arguments(u)
    assert len(calls) == 2


def test_gaussian_two_dim_argument():
    u = np.array([[0.3, 0.8]])
    A = DVine("gaussian", [0.6]).evaluate_arguments(u)
    x1, x2 = norm_ppf(0.3), norm_ppf(0.8)
    assert_allclose(A[1, 0, 0], norm_cdf((x2 - 0.6 * x1) / 0.8), rtol=1e-12)


def test_clayton_arguments_by_integration():
    rng = np.random.default_rng(2)
    phi = [1.5, 0.8, 2.5]
    vine = DVine("clayton", phi)
    u = rng.uniform(0.1, 0.9, 3)
    A = vine.evaluate_arguments(u[None, :])[:, :, 0]

    def joint(v, u0, u1):
        return np.exp(vine.log_density(np.array([u0, u1, v])))

    # F(u_2 | u_0, u_1) from the joint density, integrating out v
    num = integrate.quad(joint, 0, u[2], args=(u[0], u[1]), epsabs=1e-12)[0]
    den = integrate.quad(joint, 0, 1, args=(u[0], u[1]), epsabs=1e-12)[0]
    assert_allclose(A[2, 0], num / den, atol=1e-7)

    def joint0(v):
        return np.exp(vine.log_density(np.array([v, u[1], u[2]])))

    num = integrate.quad(joint0, 0, u[0], epsabs=1e-12)[0]
    den = integrate.quad(joint0, 0, 1, epsabs=1e-12)[0]
    assert_allclose(A[0, 2], num / den, atol=1e-7)


def test_two_dim_equals_pair():
    u = np.random.default_rng(3).random((6, 2))
    for fam, phi in [("frank", 4.0), ("gumbel", 1.7), ("clayton", 0.9)]:
        assert_allclose(DVine(fam, [phi]).log_density(u),
                        PairCopula(fam, phi).log_pdf(u[:, 0], u[:, 1]), rtol=1e-11)


@pytest.mark.parametrize("seed", range(5))
def test_gaussian_vine_is_gaussian_copula(seed):
    rng = np.random.default_rng(seed)
    lam = rng.uniform(-0.95, 0.95, 10)
    u = rng.random((30, 5))
    g = cp.gamma_from_partials(lam)
    assert_allclose(DVine("gaussian", lam).log_density(u),
                    GaussianCopula(g).log_density(u), rtol=1e-8, atol=1e-8)


def test_sampling():
    rng = np.random.default_rng(6)
    u = DVine("clayton", np.full(3, 2.0), gamma=np.zeros(3)).sample_u(50_000, rng)
    assert np.max(np.abs(np.corrcoef(u.T) - np.eye(3))) < 0.02
    u = DVine("clayton", [2.0, 1.0, 2.0], gamma=[1, 0, 1]).sample_u(50_000, rng)
    assert abs(stats.kendalltau(u[:, 0], u[:, 1])[0] - 0.5) < 0.01
    assert abs(stats.kendalltau(u[:, 1], u[:, 2])[0] - 0.5) < 0.01
    lam = [0.5, -0.3, 0.4]
    u = DVine("gaussian", lam).sample_u(50_000, rng)
    assert_allclose(np.corrcoef(norm_ppf(u).T), cp.gamma_from_partials(lam), atol=0.015)


def test_sample_two_dim():
    u = DVine("gumbel", [2.0]).sample_u(50_000, np.random.default_rng(7))
    assert abs(stats.kendalltau(u[:, 0], u[:, 1])[0] - 0.5) < 0.01
