from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.integrate import simpson
from scipy.stats import norm

from conftest import DAILY, within_se
from meanrev_jd.data import LogReturnSeries
from meanrev_jd.density import (
    DensityConfig,
    beta_eta,
    bsch_mu_hat,
    bsch_score,
    density_eta,
    density_logreturn,
    loglik,
    loglik_detail,
    mle_fit,
)
from meanrev_jd.errors import GridError, InputError
from meanrev_jd.model import DoubleExponentialJumps, GaussianJumps, ModelParams, SeriesGrid, ejk
from meanrev_jd.moments import logreturn_cumulants
from meanrev_jd.simulate import SimConfig, simulate_eta, simulate_logreturns

MERTON_ETA = ModelParams(1.0, 0.0, 0.2, 20.0, GaussianJumps(0.0, 0.05))


def test_config_validation():
    with pytest.raises(InputError):
        DensityConfig(nodes=100)
    with pytest.raises(InputError):
        DensityConfig(nodes=300)
    with pytest.raises(InputError):
        DensityConfig(u_max=-1.0)
    with pytest.raises(InputError):
        DensityConfig(mode="exact")


def test_beta_eta(bsch):
    be = beta_eta(bsch, DAILY, 7)
    assert be.mu_beta == pytest.approx(0.05 * (1 - math.exp(-DAILY)) * math.exp(-7 * DAILY), rel=1e-14)
    assert be.var_beta == pytest.approx(0.09 * ejk(1.0, DAILY, 7, 2) / 2, rel=1e-14)


def test_gaussian_peak_and_equality(bsch):
    for j in (1, 30, 1000):
        be = beta_eta(bsch, DAILY, j)
        sd = math.sqrt(be.var_beta)
        assert density_logreturn(bsch, DAILY, j, be.mu_beta) == pytest.approx(
            1 / math.sqrt(2 * math.pi * be.var_beta), rel=1e-10)
        x = be.mu_beta + sd * np.linspace(-8, 8, 2001)
        f = density_logreturn(bsch, DAILY, j, x)
        assert np.max(np.abs(f - norm.pdf(x, be.mu_beta, sd))) < 1e-8


def test_zero_intensity_jump_model_is_gaussian(bsch):
    q = ModelParams(bsch.alpha, bsch.mu, bsch.sigma, 0.0, GaussianJumps(0.1, 0.1))
    be = beta_eta(bsch, DAILY, 3)
    x = be.mu_beta + math.sqrt(be.var_beta) * np.linspace(-8, 8, 401)
    np.testing.assert_allclose(density_logreturn(q, DAILY, 3, x), density_logreturn(bsch, DAILY, 3, x),
                               atol=1e-8)


@pytest.mark.parametrize("name", ["bsch", "merton", "kou"])
@pytest.mark.parametrize("j", [1, 60])
def test_normalization(name, j, request):
    p = request.getfixturevalue(name)
    x = np.linspace(-2.0, 2.0, 400_001)
    f = density_logreturn(p, DAILY, j, x)
    assert np.all(f >= 0)
    assert simpson(f, x=x) == pytest.approx(1.0, abs=1e-6)
    kap = logreturn_cumulants(p, DAILY, j)
    assert simpson(x * f, x=x) == pytest.approx(kap[0], abs=1e-9)
    assert simpson((x - kap[0]) ** 2 * f, x=x) == pytest.approx(kap[1], rel=1e-6)


def test_symmetry():
    p = ModelParams(2.0, 0.0, 0.3, 25.0, GaussianJumps(0.0, 0.04))
    x = np.linspace(0.0, 0.3, 301)
    assert np.max(np.abs(density_logreturn(p, DAILY, 5, x) - density_logreturn(p, DAILY, 5, -x))) < 1e-8
    k = ModelParams(2.0, 0.0, 0.3, 25.0, DoubleExponentialJumps(20.0, 20.0, 0.5))
    assert np.max(np.abs(density_logreturn(k, DAILY, 5, x) - density_logreturn(k, DAILY, 5, -x))) < 1e-8


def test_direct_and_fft_inversion_agree(kou):
    x = np.linspace(-0.2, 0.2, 1001)
    a = density_logreturn(kou, DAILY, 4, x, method="direct")
    b = density_logreturn(kou, DAILY, 4, x, method="fft")
    assert np.max(np.abs(a - b)) < 1e-8 * np.max(a)


def test_eta_vanishing_intensity():
    p = ModelParams(1.0, 0.0, 0.2, 1e-8, GaussianJumps(0.0, 0.05))
    atom, diff = density_eta(p, DAILY, 5, np.array([0.0, 0.01, 0.05]))
    assert atom == pytest.approx(1.0, abs=1e-9)
    assert np.max(diff) < 1e-4


def test_eta_normalization():
    atom, _ = density_eta(MERTON_ETA, DAILY, 5, 0.0)
    assert atom == pytest.approx(math.exp(-20 * 6 * DAILY), rel=1e-14)
    x = np.linspace(-0.6, 0.6, 1_200_001)
    _, f = density_eta(MERTON_ETA, DAILY, 5, x)
    assert np.all(f >= 0)
    assert atom + simpson(f, x=x) == pytest.approx(1.0, abs=1e-6)


def test_eta_against_kernel_density():
    """The KDE of simulated draws is compared with the exact density smoothed by the same kernel,
    so the check has no smoothing bias."""
    bw, x0 = 0.004, 0.01
    draws = simulate_eta(MERTON_ETA, DAILY, 5, SimConfig(paths=10**7, seed=12)).values

    def kern(t):
        return np.where(np.abs(t) < 1, 0.75 * (1 - t * t), 0.0) / bw

    k = kern((x0 - draws) / bw)
    est, se = k.mean(), k.std(ddof=1) / math.sqrt(k.size)
    y = np.linspace(x0 - bw, x0 + bw, 20_001)
    atom, f = density_eta(MERTON_ETA, DAILY, 5, y)
    smoothed = simpson(f * kern((x0 - y) / bw), x=y)  # the atom at zero lies outside the kernel support
    assert within_se(est, se, smoothed)


def test_eta_kou_transform_too_slow(kou):
    with pytest.raises(GridError):
        density_eta(kou, DAILY, 5, 0.0)


def test_eta_literal_mode_rejected():
    with pytest.raises(GridError):
        density_eta(MERTON_ETA, DAILY, 5, 0.0, DensityConfig(mode="paper-literal"))


def test_literal_density_is_not_normalized(merton):
    x = np.linspace(-0.5, 0.5, 200_001)
    lit = density_logreturn(merton, DAILY, 3, x, DensityConfig(mode="paper-literal"))
    lt = merton.lam * 4 * DAILY
    mass = simpson(lit, x=x)
    # the uncompensated integrand equals e^{lt} at u = 0, which cancels the e^{-lt} factor
    assert mass == pytest.approx(2 * math.pi * (-math.expm1(-lt)), rel=1e-6)


# --------------------------------------------------------------------------
# Likelihood
# --------------------------------------------------------------------------


def test_loglik_gaussian_paths_agree(bsch):
    x = simulate_logreturns(bsch, SeriesGrid(DAILY, 800), SimConfig(seed=2))
    assert loglik(x, bsch, method="fourier") == pytest.approx(loglik(x, bsch, method="gaussian"), abs=1e-8)


def test_single_observation_at_mean(bsch):
    be = beta_eta(bsch, DAILY, 1)
    x = LogReturnSeries(np.array([be.mu_beta]), DAILY)
    assert loglik(x, bsch, method="fourier") == pytest.approx(-0.5 * math.log(2 * math.pi * be.var_beta),
                                                              abs=1e-10)


@pytest.mark.parametrize("name", ["merton", "kou"])
def test_loglik_reorder_invariant(name, request):
    p = request.getfixturevalue(name)
    x = simulate_logreturns(p, SeriesGrid(DAILY, 300), SimConfig(seed=9))
    perm = np.random.default_rng(0).permutation(x.n)
    y = LogReturnSeries(x.values[perm], DAILY, j=x.j[perm])
    assert loglik(x, p) == loglik(y, p)


def test_loglik_sums_marginal_densities(kou):
    x = simulate_logreturns(kou, SeriesGrid(DAILY, 20), SimConfig(seed=4))
    direct = sum(math.log(density_logreturn(kou, DAILY, int(j), v)) for j, v in zip(x.j, x.values))
    assert loglik(x, kou) == pytest.approx(direct, abs=1e-8)


def test_loglik_clipping_reported(merton):
    x = LogReturnSeries(np.array([0.0, 5.0]), DAILY)
    with pytest.warns(RuntimeWarning):
        ll, info = loglik_detail(x, merton)
    assert info["clipped"] == [1]
    assert math.isfinite(ll)


def test_loglik_prefers_truth_merton():
    p = ModelParams(2.0, 0.0, 0.3, 10.0, GaussianJumps(0.0, 0.05))
    q = ModelParams(2.0, 0.0, 0.6, 5.0, GaussianJumps(0.0, 0.05))
    wins = 0
    for seed in range(20):
        x = simulate_logreturns(p, SeriesGrid(DAILY, 2000), SimConfig(seed=100 + seed))
        wins += loglik(x, p) > loglik(x, q)
    assert wins >= 18


# --------------------------------------------------------------------------
# Pure-diffusion score equations
# --------------------------------------------------------------------------


def test_bsch_score_matches_differences():
    p = ModelParams(5.0, 0.001, 0.6)
    x = simulate_logreturns(p, SeriesGrid(DAILY, 5000), SimConfig(seed=3))
    q = ModelParams(4.0, 0.01, 0.55)
    s2, mu, a = bsch_score(x, q)

    def ll(alpha=q.alpha, m=q.mu, var=q.sigma**2):
        return loglik(x, ModelParams(alpha, m, math.sqrt(var)))

    def cd(f, v, h):
        return (f(v + h) - f(v - h)) / (2 * h)

    assert cd(lambda v: ll(var=v), q.sigma**2, 1e-5) == pytest.approx(s2, rel=1e-5)
    assert cd(lambda v: ll(m=v), q.mu, 1e-3) == pytest.approx(mu, rel=1e-5)
    assert cd(lambda v: ll(alpha=v), q.alpha, 1e-4) == pytest.approx(a, rel=1e-5)


def test_mu_score_vanishes_at_linear_solution():
    p = ModelParams(3.0, 0.2, 0.5)
    x = simulate_logreturns(p, SeriesGrid(DAILY, 2000), SimConfig(seed=6))
    m = bsch_mu_hat(x, 3.0)
    assert abs(bsch_score(x, ModelParams(3.0, m, 0.5))[1]) < 1e-10


def test_bsch_mle_first_order_conditions():
    p = ModelParams(5.0, 0.001, 0.6)
    x = simulate_logreturns(p, SeriesGrid(DAILY, 5000), SimConfig(seed=1))
    res = mle_fit(x, "bsch")
    assert res.converged
    assert max(abs(v) for v in res.diagnostics["scores"].values()) < 1e-6
    assert res.std_errors["sigma"] > 0


def test_merton_mle_improves_on_start(merton):
    x = simulate_logreturns(merton, SeriesGrid(DAILY, 400), SimConfig(seed=5))
    init = ModelParams(1.0, 0.0, 0.2, 20.0, GaussianJumps(0.0, 0.08))
    res = mle_fit(x, "merton", init=init, fixed={"alpha": 2.0, "mu": 0.0, "mu_j": 0.0}, maxiter=60)
    assert res.objective >= loglik(x, init.replace(alpha=2.0))
    assert set(res.diagnostics["free"]) == {"sigma", "lam", "sigma_j"}


@pytest.mark.slow
def test_degenerate_merton_suppresses_jumps():
    """Pure-diffusion data fitted with the Gaussian-jump model.

    Many small jumps reproduce a diffusion, so the likelihood is nearly flat
    along a ridge in (sigma, lam, sigma_j) and the fitted intensity need not
    shrink; this is recorded as an identifiability limitation.
    """
    p = ModelParams(2.0, 0.0, 0.3)
    small = 0
    lams = []
    for seed in range(20):
        x = simulate_logreturns(p, SeriesGrid(DAILY, 500), SimConfig(seed=200 + seed))
        lam = mle_fit(x, "merton", std_errors=False).params.lam
        lams.append(lam)
        small += lam < 1
    print(f"fitted intensities: {np.round(lams, 3).tolist()}")
    assert small >= 15
