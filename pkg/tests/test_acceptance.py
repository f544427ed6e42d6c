"""Acceptance criteria 1-11.

Each test records one PASS/FAIL line (shown in the terminal summary) and
then asserts the same condition, so a failing criterion also fails the run.
"""
import time

import numpy as np
import pytest
from scipy import integrate, stats

from bayescopula import cli
from bayescopula import corr_param as cp
from bayescopula.dvine import DVine
from bayescopula.gaussian_copula import GaussianCopula
from bayescopula.inference import posterior_mean, probability_interval, retained
from bayescopula.margins import MarginSpec
from bayescopula.mcmc import build_t_proposal
from bayescopula.pair_copulas import PairCopula
from bayescopula.samplers import (FitTask, exact_discrete_loglik, run, run_dvine_selection,
                                  run_exact_discrete, run_gaussian_discrete,
                                  run_gaussian_selection)
from bayescopula.special import norm_ppf

H_PARAMS = {
    "gaussian": [-0.9, -0.5, 0.1, 0.5, 0.9],
    "frank": [-8.0, -2.0, 1.0, 5.0, 12.0],
    "clayton": [0.3, 1.0, 2.0, 5.0, 10.0],
    "gumbel": [1.2, 1.5, 2.0, 3.0, 6.0],
}


def test_criterion_01_closed_form_dependence(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    cl = PairCopula("clayton", 2.0).dependence()
    gu = PairCopula("gumbel", 2.0).dependence()
    exact = (abs(cl["tau"] - 2.0 / 4.0) < 1e-12 and abs(cl["lambda_low"] - 2 ** -0.5) < 1e-12
             and abs(gu["tau"] - 0.5) < 1e-12 and abs(gu["lambda_up"] - (2 - np.sqrt(2))) < 1e-12)
    taus = {}
    for fam in ("clayton", "gumbel"):
        u = PairCopula(fam, 2.0).sample(100_000, rng)
        taus[fam] = stats.kendalltau(u[:, 0], u[:, 1])[0]
    sim = all(abs(t - 0.5) <= 0.01 for t in taus.values())
    dt = time.perf_counter() - t0
    ok = exact and sim and dt < 10
    verdict(1, ok, f"closed forms exact={exact}; tau-hat clayton={taus['clayton']:.4f} "
                   f"gumbel={taus['gumbel']:.4f}; {dt:.1f}s")
    assert ok


def test_criterion_02_dvine_gaussian_equivalence(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(102)
    worst = 0.0
    for _ in range(200):
        m = int(rng.integers(2, 6))
        lam = rng.uniform(-0.95, 0.95, cp.n_pairs(m))
        u = rng.random(m)
        a = DVine("gaussian", lam).log_density(u)
        b = GaussianCopula(cp.gamma_from_partials(lam)).log_density(u)
        worst = max(worst, abs(a - b))
    dt = time.perf_counter() - t0
    ok = worst < 1e-8 and dt < 30
    verdict(2, ok, f"200 cases, max |diff| = {worst:.2e}; {dt:.1f}s")
    assert ok


def test_criterion_03_scheme_equivalence(verdict):
    t0 = time.perf_counter()
    corr = cp.gamma_from_partials([0.5, 0.2, 0.4, 0.0, -0.3, 0.3])
    y = norm_ppf(GaussianCopula(corr).sample_u(200, np.random.default_rng(103)))
    kw = dict(selection=True, sweeps=500, burn_in=100)
    a = list(run_gaussian_selection(FitTask(y, ["normal"] * 4, **kw), np.random.default_rng(7)))
    b = list(run_dvine_selection(FitTask(y, ["normal"] * 4, copula="dvine", family="gaussian",
                                         **kw), np.random.default_rng(7)))
    same_discrete = len(a) == len(b) == 500 and all(
        np.array_equal(ra.gamma, rb.gamma) and np.array_equal(ra.accepted, rb.accepted)
        for ra, rb in zip(a, b))
    rel = 0.0
    for ra, rb in zip(a, b):
        pairs = [(ra.latent_copula, rb.latent_copula), (ra.corr, rb.corr),
                 (np.concatenate(ra.theta), np.concatenate(rb.theta)),
                 (np.array([ra.loglik]), np.array([rb.loglik]))]
        for x, z in pairs:
            rel = max(rel, float(np.max(np.abs(x - z) / (1.0 + np.abs(z)))))
    dt = time.perf_counter() - t0
    ok = same_discrete and rel < 1e-6 and dt < 120
    verdict(3, ok, f"indicators and accept flags identical={same_discrete}; "
                   f"max relative difference of real-valued state {rel:.1e}; {dt:.1f}s")
    assert ok


def test_criterion_04_h_functions(verdict):
    t0 = time.perf_counter()
    g = (np.arange(20) + 0.5) / 20
    u1, u2 = np.meshgrid(g, g)
    e = 1e-6
    worst = 0.0
    for fam, params in H_PARAMS.items():
        for phi in params:
            cop = PairCopula(fam, phi)
            fd = (cop.cdf(u1, u2 + e) - cop.cdf(u1, u2 - e)) / (2 * e)
            worst = max(worst, float(np.max(np.abs(cop.h(u1, u2) - fd))))
    dt = time.perf_counter() - t0
    ok = worst < 1e-5 and dt < 10
    verdict(4, ok, f"20x20 grid x 4 families x 5 values, max |h - dC/du2| = {worst:.1e}; "
                   f"{dt:.1f}s")
    assert ok


def test_criterion_05_density_normalisation(verdict):
    t0 = time.perf_counter()
    cases = [("independence", None)] + [(f, p) for f, ps in H_PARAMS.items()
                                        for p in ps]
    worst = 0.0
    for fam, phi in cases:
        cop = PairCopula(fam, phi)
        total, _ = integrate.dblquad(lambda b, a: cop.pdf(a, b), 0, 1, 0, 1,
                                     epsabs=1e-8, epsrel=1e-8)
        worst = max(worst, abs(total - 1.0))
    dt = time.perf_counter() - t0
    ok = worst < 1e-3 and dt < 30
    verdict(5, ok, f"{len(cases)} densities, max |integral - 1| = {worst:.1e}; {dt:.1f}s")
    assert ok


def test_criterion_06_prior_recovery(verdict):
    t0 = time.perf_counter()
    y = np.random.default_rng(106).standard_normal((30, 4))
    # empirical margins have no free parameters, so the chain moves only (lambda, gamma)
    task = FitTask(y, ["empirical"] * 4, selection=True, prior_only=True,
                   sweeps=100_000, burn_in=0)
    counts = np.zeros(7)
    for rec in run(task, np.random.default_rng(6)):
        counts[int(rec.gamma.sum())] += 1
    freq = counts / counts.sum()
    worst = float(np.max(np.abs(freq - 1 / 7)))
    dt = time.perf_counter() - t0
    ok = worst <= 0.03 and dt < 60
    verdict(6, ok, f"pi(w) = {np.round(freq, 3).tolist()}, max |pi - 1/7| = {worst:.3f}; "
                   f"{dt:.1f}s")
    assert ok


# With the default step 0.01 the latent of an excluded pair crosses its
# prior range in about (2 / 0.01)^2 sweeps, so the indicator of the null
# pair switches rarely and its inclusion estimate has Monte Carlo standard
# error near 0.09 at J = 10^4.  Step 0.2 reproduces the grid-integrated
# posterior (see test_samplers.py::test_null_pair_inclusion_matches_grid_oracle).
C7_STEP = 0.2


def _criterion7_rep(seed, step=C7_STEP):
    # pair order is (1,0), (2,0), (2,1): lambda_21 = 0.6, lambda_31 = 0, lambda_32 = 0.6
    corr = cp.gamma_from_partials([0.6, 0.0, 0.6])
    y = norm_ppf(GaussianCopula(corr).sample_u(1000, np.random.default_rng(seed)))
    task = FitTask(y, ["normal"] * 3, selection=True, sweeps=10_000, step=step)
    recs = retained(list(run(task, np.random.default_rng(10_000 + seed))), task.burn_in)
    mean = posterior_mean(recs, "copula")
    incl = posterior_mean(recs, "gamma")
    lo, hi = probability_interval(recs, "copula", 0.1)
    return mean, incl, lo, hi


def test_criterion_07_continuous_recovery(verdict):
    t0 = time.perf_counter()
    reps = [_criterion7_rep(seed) for seed in range(1, 21)]
    mean, incl, _, _ = reps[0]
    point = abs(mean[0] - 0.6) <= 0.07 and abs(mean[2] - 0.6) <= 0.07
    select = incl[1] < 0.5 and incl[0] > 0.9
    cover = [sum(lo[k] <= 0.6 <= hi[k] for _, _, lo, hi in reps) for k in (0, 2)]
    n_point = sum(abs(r[0][0] - 0.6) <= 0.07 and abs(r[0][2] - 0.6) <= 0.07 for r in reps)
    n_select = sum(r[1][1] < 0.5 and r[1][0] > 0.9 for r in reps)
    dt = time.perf_counter() - t0
    default_incl = _criterion7_rep(1, step=0.01)[1][1]
    ok = point and select and min(cover) >= 15 and dt < 900
    verdict(7, ok, f"rep 1: lambda21={mean[0]:.3f} lambda32={mean[2]:.3f} "
                   f"pr(g31)={incl[1]:.3f} pr(g21)={incl[0]:.3f}; coverage {cover[0]}/20, "
                   f"{cover[1]}/20; point ok in {n_point}/20, selection ok in {n_select}/20; "
                   f"{dt:.0f}s (step {C7_STEP}; default step 0.01 gives pr(g31)={default_incl:.3f})")
    assert ok


def test_criterion_08_archimedean_recovery(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(108)
    u = PairCopula("clayton", 2.0).sample(1000, rng)
    margins = [MarginSpec("studentt", (0.0, 1.0, 5.0)), MarginSpec("studentt", (2.0, 0.5, 8.0))]
    y = np.column_stack([mg.quantile(u[:, j]) for j, mg in enumerate(margins)])
    task = FitTask(y, ["studentt", "studentt"], copula="dvine", family="clayton",
                   selection=True, sweeps=5000)
    recs = retained(list(run(task, np.random.default_rng(8))), task.burn_in)
    # tau is 0 on sweeps where the pair is excluded
    taus = [r.gamma[0] * PairCopula("clayton", r.latent_copula[0]).dependence()["tau"]
            for r in recs]
    tau = float(np.mean(taus))
    dt = time.perf_counter() - t0
    ok = abs(tau - 0.5) <= 0.08 and dt < 300
    verdict(8, ok, f"posterior mean tau = {tau:.4f}; {dt:.0f}s")
    assert ok


def test_criterion_09_discrete_augmentation(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(109)
    margins = [MarginSpec("bernoulli", (0.4,)), MarginSpec("bernoulli", (0.6,))]
    u = GaussianCopula(np.array([[1, 0.5], [0.5, 1]])).sample_u(500, rng)
    y = np.column_stack([mg.quantile(u[:, j]) for j, mg in enumerate(margins)])
    kw = dict(sweeps=20_000, burn_in=4000, adapt=True)
    task = FitTask(y, ["bernoulli"] * 2, keep_latent=True, **kw)
    vals, bounds_ok = [], True
    for rec in run_gaussian_discrete(task, np.random.default_rng(9)):
        for j in range(2):
            mg = MarginSpec("bernoulli", tuple(rec.theta[j]))
            a, b = norm_ppf(mg.cdf_left(y[:, j])), norm_ppf(mg.cdf(y[:, j]))
            x = rec.latent[:, j]
            bounds_ok &= bool(np.all((a <= x) & (x < b)))
        if rec.sweep >= task.burn_in:
            vals.append(rec.corr[0])
    aug = float(np.mean(vals))
    exact_task = FitTask(y, ["bernoulli"] * 2, **kw)
    ex = [r.corr[0] for r in run_exact_discrete(exact_task, np.random.default_rng(19))
          if r.sweep >= exact_task.burn_in]
    exact = float(np.mean(ex))
    dt = time.perf_counter() - t0
    ok = abs(aug - exact) <= 0.03 and bounds_ok and dt < 600
    verdict(9, ok, f"augmented {aug:.4f} vs exact-likelihood {exact:.4f}; latent bounds held "
                   f"at every sweep={bounds_ok}; {dt:.0f}s")
    assert ok


def test_criterion_10_mode_and_scale(verdict):
    t0 = time.perf_counter()
    a = np.array([0.5, -1.5, 2.0, 0.1])
    M = np.random.default_rng(110).standard_normal((4, 4))
    A = M @ M.T + 0.5 * np.eye(4)
    prop = build_t_proposal(lambda t: -0.5 * (t - a) @ A @ (t - a), np.zeros(4))
    mode_err = float(np.max(np.abs(prop.mode - a)))
    scale_err = float(np.max(np.abs(prop.scale - np.linalg.inv(A)) / np.abs(np.linalg.inv(A))))
    dt = time.perf_counter() - t0
    ok = mode_err <= 1e-6 and scale_err <= 1e-4 and dt < 1
    verdict(10, ok, f"mode error {mode_err:.1e}, relative scale error {scale_err:.1e}; "
                    f"{dt:.2f}s")
    assert ok


FIT = """\
data: data.csv
margins: [normal, studentt, normal]
copula: {type: gaussian, selection: true}
mcmc: {seed: 2024, sweeps: 300, burn_in: 50, chains: 2}
output: run
"""


def test_criterion_11_determinism(tmp_path, monkeypatch, verdict):
    t0 = time.perf_counter()
    monkeypatch.delenv(cli.OUT_ENV, raising=False)
    corr = cp.gamma_from_partials([0.5, 0.1, 0.4])
    y = norm_ppf(GaussianCopula(corr).sample_u(300, np.random.default_rng(111)))
    np.savetxt(tmp_path / "data.csv", y, delimiter=",", header="a,b,c", comments="")
    (tmp_path / "fit.yaml").write_text(FIT)
    files = []
    for _ in range(2):
        assert cli.main(["fit", "--config", str(tmp_path / "fit.yaml")]) == 0
        files.append([(tmp_path / "run" / f"chain_{k}.txt").read_bytes() for k in range(2)])
    same = files[0] == files[1]
    dt = time.perf_counter() - t0
    ok = same and dt < 60
    verdict(11, ok, f"two fits, 2 chains each, byte-identical={same}; {dt:.1f}s")
    assert ok


@pytest.mark.parametrize("cell", [(0, 0), (1, 1)])
def test_exact_cells_sum_check(cell):
    # sanity check used by criterion 9: the four exact cell probabilities sum to one
    margins = [MarginSpec("bernoulli", (0.4,)), MarginSpec("bernoulli", (0.6,))]
    model = GaussianCopula(np.array([[1, 0.5], [0.5, 1]]))
    total = sum(np.exp(exact_discrete_loglik(model, margins, [c]))
                for c in [(0, 0), (0, 1), (1, 0), (1, 1)])
    assert abs(total - 1.0) < 1e-12
