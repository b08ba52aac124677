from __future__ import annotations

import json
import os
import subprocess
import sys

import numpy as np
import pytest

from meanrev_jd import _kernels

nb = pytest.importorskip("numba")
NP, NB = _kernels.NUMPY_KERNELS, _kernels.NUMBA_KERNELS


def test_jump_decay_sums_agree():
    rng = np.random.default_rng(0)
    counts = rng.poisson(1.3, 5000).astype(np.int64)
    total = int(counts.sum())
    ages, xi = rng.random(total) * 0.1, rng.normal(0, 0.05, total)
    for a, b in zip(NP.jump_decay_sums(counts, ages, xi, 2.5), NB.jump_decay_sums(counts, ages, xi, 2.5)):
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-15)
    empty = NB.jump_decay_sums(np.zeros(3, dtype=np.int64), np.empty(0), np.empty(0), 1.0)
    np.testing.assert_array_equal(empty[0], np.zeros(3))


def test_fourier_cos_sums_agree():
    rng = np.random.default_rng(1)
    x = rng.normal(0, 0.02, 300)
    u = np.linspace(0, 400, 257)
    w = np.full(u.size, 1.0)
    w[[0, -1]] = 0.5
    phi = np.exp(-1e-4 * u**2)[None, :] * np.exp(1j * rng.normal(size=(4, 1)) * 1e-3 * u[None, :])
    rows = rng.integers(0, 4, x.size).astype(np.int64)
    a = NP.fourier_cos_sums(x, rows, u, w, phi.real.copy(), phi.imag.copy())
    b = NB.fourier_cos_sums(x, rows, u, w, phi.real.copy(), phi.imag.copy())
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)


def test_gauss_jump_panels_agree():
    gl_x, gl_w = np.polynomial.legendre.leggauss(8)
    b = np.linspace(-60, 60, 41)
    args = (b, -0.7, -0.01, 0.04, 1.5, 1 / 252, 12, 2, gl_x, gl_w)
    np.testing.assert_allclose(NP.gauss_jump_panels(*args), NB.gauss_jump_panels(*args), rtol=1e-12, atol=1e-14)


def test_gauss_panels_integrate_cf():
    """Cumulative panels equal the closed path integral for a point-mass-like jump law."""
    gl_x, gl_w = np.polynomial.legendre.leggauss(8)
    b, alpha, delta = np.array([3.0]), 2.0, 0.1
    out = NB.gauss_jump_panels(b, 0.0, 0.0, 0.0, alpha, delta, 3, 1, gl_x, gl_w)
    # mu_j = sigma_j = 0: the integrand is 1, so panel k accumulates k * delta
    np.testing.assert_allclose(out[:, 0].real, delta * np.arange(4), rtol=1e-14)


def test_fallback_backend_same_results():
    code = ("import json, numpy as np; from meanrev_jd import _kernels; "
            "from meanrev_jd.model import ModelParams, GaussianJumps, SeriesGrid; "
            "from meanrev_jd.simulate import simulate_logreturns, SimConfig; "
            "from meanrev_jd.density import loglik; "
            "p = ModelParams(2.0, 0.0, 0.3, 10.0, GaussianJumps(0.0, 0.05)); "
            "x = simulate_logreturns(p, SeriesGrid(1/252, 200), SimConfig(seed=3)); "
            "print(json.dumps([_kernels.BACKEND, x.values.tolist(), loglik(x, p)]))")
    out = {}
    for flag in ("0", "1"):
        env = dict(os.environ, MEANREV_JD_DISABLE_NUMBA=flag)
        proc = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        out[flag] = json.loads(proc.stdout)
    assert out["0"][0] == "numba" and out["1"][0] == "numpy"
    np.testing.assert_allclose(out["0"][1], out["1"][1], rtol=1e-12, atol=1e-15)
    assert out["0"][2] == pytest.approx(out["1"][2], rel=1e-10)
