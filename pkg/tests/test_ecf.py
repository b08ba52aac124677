from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from conftest import DAILY, model_grid, within_se
from meanrev_jd.data import LogReturnSeries
from meanrev_jd.ecf import (
    FrequencyGrid,
    _mean_cf,
    averaged_estimating_functions,
    continuum_objective,
    ecf,
    estimating_functions,
    estimating_matrix,
    gmm_fit,
    gmm_objective,
    omega,
    omega_bar,
    weight_factor,
)
from meanrev_jd.errors import GridError, InputError
from meanrev_jd.model import ModelParams, SeriesGrid, cf_logreturn
from meanrev_jd.simulate import SimConfig, simulate_logreturn_paths, simulate_logreturns, simulate_returns_at


def test_ecf_examples():
    assert ecf([0.3, -1.2, 4.0], 0.0) == 1
    assert ecf([0.3], 2.0) == pytest.approx(complex(math.cos(0.6), math.sin(0.6)), abs=1e-15)
    assert ecf([0.1, -0.1], 5.0) == pytest.approx(math.cos(0.5), abs=1e-15)
    with pytest.raises(InputError):
        ecf([], 1.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=1, max_size=50), st.floats(-200, 200))
def test_ecf_hermitian_and_bounded(xs, u):
    a, b = ecf(xs, u), ecf(xs, -u)
    assert b == np.conj(a)
    assert abs(a) <= 1 + 1e-15


def test_frequency_grid():
    fg = FrequencyGrid(20.0, 4)
    np.testing.assert_allclose(fg.points, [-10.0, 0.0, 10.0, 20.0])
    assert fg.delta == 10.0
    with pytest.raises(InputError):
        FrequencyGrid(1.0, 1)
    with pytest.raises(InputError):
        FrequencyGrid(0.0, 4)


def test_estimating_functions_by_hand(kou):
    x = LogReturnSeries(np.array([0.01, -0.02]), DAILY)
    fg = FrequencyGrid(30.0, 2)
    f = estimating_functions(x, kou, fg, 2)
    u = fg.points
    phi = cf_logreturn(kou, 0.0, DAILY, 2, u)
    np.testing.assert_allclose(f, np.concatenate([np.cos(-0.02 * u) - phi.real, np.sin(-0.02 * u) - phi.imag]),
                               atol=1e-15)
    np.testing.assert_allclose(estimating_matrix(x, kou, fg)[1], f, atol=1e-15)
    with pytest.raises(InputError):
        estimating_functions(x, kou, fg, 7)


def test_self_test_zero(merton):
    x = simulate_logreturns(merton, SeriesGrid(DAILY, 50), SimConfig(seed=1))
    fg = FrequencyGrid(40.0, 10)
    model = _mean_cf(merton, DAILY, x.j, fg.points)
    assert np.max(np.abs(averaged_estimating_functions(x, merton, fg, model))) < 1e-12


@pytest.mark.parametrize("name", ["bsch", "merton", "kou"])
def test_estimating_functions_mean_zero(name, request):
    p = request.getfixturevalue(name)
    g = SeriesGrid(DAILY, 20)
    paths = simulate_logreturn_paths(p, g, SimConfig(paths=100_000, seed=5)).values
    fg = FrequencyGrid(60.0, 6)
    u = fg.points
    phi = _mean_cf(p, DAILY, g.j, u)
    z = np.exp(1j * paths[:, :, None] * u[None, None, :]).mean(axis=1) - phi
    comp = np.concatenate([z.real, z.imag], axis=1)
    keep = comp.std(axis=0) > 0  # u = 0 gives identically zero components
    assert within_se(comp.mean(0)[keep], comp.std(0, ddof=1)[keep] / math.sqrt(comp.shape[0]), 0.0, m=int(keep.sum()))


def test_omega_degenerate_zero():
    p = ModelParams(1.0, 0.0, 0.0)
    assert np.max(np.abs(omega(p, DAILY, FrequencyGrid(10.0, 4), 3).matrix)) < 1e-15


def test_omega_cos_variance_mc(bsch):
    j = 4
    fg = FrequencyGrid(1.0, 2)  # points 0 and 1
    om = omega(bsch, DAILY, fg, j)
    phi1 = cf_logreturn(bsch, 0.0, DAILY, j, 1.0)
    phi2 = cf_logreturn(bsch, 0.0, DAILY, j, 2.0)
    assert om.rr[1, 1] == pytest.approx(0.5 * (phi2.real + 1) - phi1.real**2, rel=1e-12)
    x = simulate_returns_at(bsch.replace(sigma=3.0), DAILY, j, SimConfig(paths=10**7, seed=2)).values
    om = omega(bsch.replace(sigma=3.0), DAILY, fg, j)
    c = np.cos(x)
    d = (c - c.mean()) ** 2
    assert within_se(d.mean(), d.std(ddof=1) / math.sqrt(d.size), om.rr[1, 1])


def test_omega_structure_and_psd():
    fg = FrequencyGrid(80.0, 8)
    for p in model_grid()[::4]:
        om = omega_bar(p, SeriesGrid(DAILY, 50), fg)
        np.testing.assert_array_equal(om.matrix, om.matrix.T)
        np.testing.assert_array_equal(om.ir, om.ri.T)
        assert om.min_eigenvalue >= -1e-10


def test_omega_bar_is_average(kou):
    fg = FrequencyGrid(50.0, 4)
    g = SeriesGrid(DAILY, 6)
    avg = sum(omega(kou, DAILY, fg, j).matrix for j in g.j) / g.n
    np.testing.assert_allclose(omega_bar(kou, g, fg).matrix, avg, atol=1e-14)


def test_weight_factor_inverse(merton):
    fg = FrequencyGrid(50.0, 4)
    om = omega_bar(merton, SeriesGrid(DAILY, 30), fg)
    A, info = weight_factor(om)
    assert "ridge" in info  # u = 0 makes Omega singular
    A_lit, _ = weight_factor(om, literal=True)
    np.testing.assert_allclose(A_lit.T @ A_lit, om.clipped(), atol=1e-14)


def test_exactly_identified_system(bsch):
    x = simulate_logreturns(bsch, SeriesGrid(DAILY, 3000), SimConfig(seed=7))
    fg = FrequencyGrid(2.0 / np.std(x.values), 2)  # points 0 and eta: two informative conditions
    res = gmm_fit(x, "bsch", fg, init=bsch, fixed={"alpha": bsch.alpha})
    assert res.objective < 1e-8


def test_two_step_non_increasing(kou):
    x = simulate_logreturns(kou, SeriesGrid(DAILY, 1500), SimConfig(seed=11))
    res = gmm_fit(x, "kou", init=kou, fixed={"q": kou.jumps.q, "alpha": kou.alpha})
    assert res.objective <= res.diagnostics["step1_objective_step2_weight"] * (1 + 1e-12)
    assert res.diagnostics["J"] == pytest.approx(x.n * res.objective)


def test_objective_prefers_truth():
    p = ModelParams(5.0, 0.001, 0.6)
    wins = 0
    for seed in range(20):
        x = simulate_logreturns(p, SeriesGrid(DAILY, 5000), SimConfig(seed=300 + seed))
        fg = FrequencyGrid(20.0, 10)
        A, _ = weight_factor(omega_bar(p, DAILY, fg, x.j))
        wins += gmm_objective(x, p, fg, A) < gmm_objective(x, p.replace(sigma=1.2), fg, A)
    assert wins >= 18


def test_continuum_model_cf_gives_zero(merton):
    x = simulate_logreturns(merton, SeriesGrid(DAILY, 40), SimConfig(seed=3))
    for weight in ("gaussian", "paper-literal"):
        val = continuum_objective(x, merton, weight, scale=30.0,
                                  ecf_fn=lambda u: _mean_cf(merton, DAILY, x.j, u))
        assert val == 0.0


def test_continuum_at_truth_small(kou):
    j = 5
    v = simulate_returns_at(kou, DAILY, j, SimConfig(paths=10**6, seed=4)).values
    x = LogReturnSeries(v, DAILY, j=np.full(v.size, j))
    sd = float(np.std(v))
    for weight in ("gaussian", "paper-literal"):
        # normalized by the weight's mass so the bound is on the squared CF error itself
        val = continuum_objective(x, kou, weight, scale=2 / sd, tol=1e-8) * sd / 2
        assert val < 1e-3


def test_continuum_domain_error(bsch):
    x = LogReturnSeries(np.array([0.01, 0.02]), DAILY)
    with pytest.raises(GridError):
        continuum_objective(x, bsch, "gaussian", u_max=1.0)
    with pytest.raises(InputError):
        continuum_objective(x, bsch, "flat")


def test_continuum_weights_same_argmin():
    p = ModelParams(5.0, 0.001, 0.6)
    x = simulate_logreturns(p, SeriesGrid(DAILY, 5000), SimConfig(seed=21))
    s = 2 / float(np.std(x.values))
    est = {}
    for weight in ("gaussian", "paper-literal"):
        r = minimize_scalar(lambda sig: continuum_objective(x, p.replace(sigma=sig), weight, scale=s),
                            bounds=(0.2, 1.5), method="bounded", options={"xatol": 1e-6})
        est[weight] = r.x
    assert est["paper-literal"] == pytest.approx(est["gaussian"], rel=0.05)
