"""Exact simulation of the mean-reverting jump-diffusion.

``Y_t = mu (1 - e^{-alpha t}) + W_t`` with ``W_t = int_0^t e^{-alpha (t-s)} dV_s``.
Between two grid times the Gaussian part of ``W`` is an exact OU step and the
jump part is simulated from its definition: a Poisson number of jumps at
uniform times, each weighted by its decay factor. There is no time
discretization, so the sampler is exact in law at the grid times.

Esscher-measure expectations use importance weights
``exp(theta V_T - T l_V(theta))`` by default. Alternatively, the paths can be
drawn directly from the tilted law, which is again a jump-diffusion with
drift ``sigma^2 theta``, intensity ``lam M(theta)`` and exponentially tilted
jump sizes.

Random numbers come from numpy's PCG64, with one child ``SeedSequence`` per
chunk of paths, so results depend only on ``(seed, chunk)``.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import InputError
from .model import (
    DoubleExponentialJumps,
    GaussianJumps,
    ModelParams,
    SeriesGrid,
    _delta_of,
    check_theta,
    jump_mgf,
    laplace_exponent,
)

ESS_WARN_FRACTION = 0.01


class WeightDegeneracyWarning(UserWarning):
    """Effective sample size of importance weights below 1% of the paths."""


@dataclass(frozen=True)
class SimConfig:
    """Monte-Carlo settings.

    Attributes:
        paths: Number of paths.
        seed: Root seed.
        measure: "historic" or "esscher".
        theta: Esscher parameter (required when measure is "esscher").
        tilt: "weights" (importance weights) or "direct" (simulate the tilted law).
        chunk: Paths per RNG stream / memory block.
    """

    paths: int = 100_000
    seed: int = 0
    measure: str = "historic"
    theta: float | None = None
    tilt: str = "weights"
    chunk: int = 500_000

    def __post_init__(self):
        if self.paths < 1:
            raise InputError(f"paths must be >= 1, got {self.paths}")
        if self.chunk < 1:
            raise InputError(f"chunk must be >= 1, got {self.chunk}")
        if self.measure not in ("historic", "esscher"):
            raise InputError(f"measure must be 'historic' or 'esscher', got {self.measure!r}")
        if self.tilt not in ("weights", "direct"):
            raise InputError(f"tilt must be 'weights' or 'direct', got {self.tilt!r}")
        if self.measure == "esscher" and self.theta is None:
            raise InputError("Esscher measure needs theta")


@dataclass
class SimulationResult:
    """Simulated values with optional importance weights (mean one under P)."""

    values: np.ndarray
    weights: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)

    def mean(self, f=None) -> tuple[float, float]:
        """Weighted Monte-Carlo mean of f(values) and its standard error."""
        v = self.values if f is None else f(self.values)
        if self.weights is not None:
            v = v * self.weights.reshape(self.weights.shape + (1,) * (v.ndim - 1))
        n = v.shape[0]
        return v.mean(axis=0), v.std(axis=0, ddof=1) / math.sqrt(n)


# --------------------------------------------------------------------------
# Building blocks
# --------------------------------------------------------------------------


def draw_jumps(jumps, size: int, rng: np.random.Generator) -> np.ndarray:
    """Draw jump sizes from the jump law."""
    if isinstance(jumps, GaussianJumps):
        return rng.normal(jumps.mu, jumps.sigma, size)
    if isinstance(jumps, DoubleExponentialJumps):
        up = rng.random(size) < jumps.q
        mag = rng.standard_exponential(size)
        return np.where(up, mag / jumps.eta1, -mag / jumps.eta2)
    raise InputError("cannot draw jumps for a model without jumps")


def tilted_model(p: ModelParams, theta: float) -> tuple[ModelParams, float]:
    """Law of V under the Esscher measure: (jump-diffusion params, extra drift of V)."""
    check_theta(p, theta)
    drift = p.sigma**2 * theta
    if p.lam == 0:
        return p, drift
    m = jump_mgf(p, theta)
    j = p.jumps
    if isinstance(j, GaussianJumps):
        jt = GaussianJumps(j.mu + j.sigma**2 * theta, j.sigma)
    else:
        qt = (j.q * j.eta1 / (j.eta1 - theta)) / m
        jt = DoubleExponentialJumps(j.eta1 - theta, j.eta2 + theta, min(max(qt, 0.0), 1.0))
    return ModelParams(p.alpha, p.mu, p.sigma, p.lam * m, jt), drift


def _seed_streams(cfg: SimConfig):
    nchunks = -(-cfg.paths // cfg.chunk)
    children = np.random.SeedSequence(cfg.seed).spawn(nchunks)
    for i, ss in enumerate(children):
        size = min(cfg.chunk, cfg.paths - i * cfg.chunk)
        yield size, np.random.Generator(np.random.PCG64(ss))


def _simulate_block(p: ModelParams, times: np.ndarray, size: int, rng: np.random.Generator,
                    drift: float = 0.0, track_v: bool = False):
    """W at ``times`` for ``size`` paths, and V at the last time if requested."""
    a = p.alpha
    m = times.size
    out = np.empty((size, m))
    w = np.zeros(size)
    vb = np.zeros(size) if track_v else None
    vj = np.zeros(size) if track_v else None
    prev = 0.0
    for i in range(m):
        h = float(times[i] - prev)
        e = math.exp(-a * h)
        cov = -math.expm1(-a * h) / a
        w *= e
        if drift:
            w += drift * cov
        if p.sigma > 0:
            var_ou = -math.expm1(-2 * a * h) / (2 * a)
            z1 = rng.standard_normal(size)
            g = math.sqrt(var_ou) * z1
            w += p.sigma * g
            if track_v:
                resid = max(h - cov * cov / var_ou, 0.0) if var_ou > 0 else h
                vb += (cov / math.sqrt(var_ou)) * z1 + math.sqrt(resid) * rng.standard_normal(size)
        if p.lam > 0:
            counts = rng.poisson(p.lam * h, size)
            total = int(counts.sum())
            ages = rng.random(total) * h
            xi = draw_jumps(p.jumps, total, rng)
            wsum, vsum = _kernels.jump_decay_sums(counts.astype(np.int64), ages, xi, a)
            w += wsum
            if track_v:
                vj += vsum
        out[:, i] = w
        prev = float(times[i])
    v_t = None
    if track_v:
        v_t = p.sigma * vb + vj + drift * float(times[-1])
    return out, v_t


def _iter_blocks(p: ModelParams, times, cfg: SimConfig):
    """Yield (W block, weights or None) for each chunk under the requested measure."""
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0 or times[0] <= 0 or np.any(np.diff(times) <= 0):
        raise InputError("simulation times must be positive and strictly increasing")
    if cfg.measure == "historic":
        for size, rng in _seed_streams(cfg):
            yield _simulate_block(p, times, size, rng)[0], None
        return
    theta = float(cfg.theta)
    if cfg.tilt == "direct":
        pt, drift = tilted_model(p, theta)
        for size, rng in _seed_streams(cfg):
            yield _simulate_block(pt, times, size, rng, drift=drift)[0], None
        return
    check_theta(p, theta)
    log_norm = float(np.real(laplace_exponent(p, theta))) * float(times[-1])
    for size, rng in _seed_streams(cfg):
        w, v_t = _simulate_block(p, times, size, rng, track_v=True)
        yield w, np.exp(theta * v_t - log_norm)


def _ess_diagnostics(weights: np.ndarray | None, paths: int) -> dict:
    if weights is None:
        return {}
    ess = float(weights.sum() ** 2 / np.sum(weights * weights))
    if ess < ESS_WARN_FRACTION * paths:
        warnings.warn(
            f"importance weights degenerate: effective sample size {ess:.0f} of {paths} paths",
            WeightDegeneracyWarning,
            stacklevel=3,
        )
    return {"ess": ess, "ess_fraction": ess / paths}


def _collect(p, times, cfg):
    ws, wts = [], []
    for w, wt in _iter_blocks(p, times, cfg):
        ws.append(w)
        if wt is not None:
            wts.append(wt)
    w = np.concatenate(ws, axis=0)
    weights = np.concatenate(wts) if wts else None
    return w, weights


# --------------------------------------------------------------------------
# Public samplers
# --------------------------------------------------------------------------


def simulate_increment(p: ModelParams, t0: float, t1: float, rng: np.random.Generator, size: int | None = None):
    """Exact draw(s) of int_{t0}^{t1} e^{-alpha (t1-s)} dV_s."""
    if not t1 > t0:
        raise InputError("need t1 > t0")
    n = 1 if size is None else int(size)
    w, _ = _simulate_block(p, np.array([t1 - t0]), n, rng)
    return float(w[0, 0]) if size is None else w[:, 0]


def simulate_logprices(p: ModelParams, times, cfg: SimConfig) -> SimulationResult:
    """Y at the given times for ``cfg.paths`` paths; values have shape (paths, len(times))."""
    times = np.asarray(times, dtype=float)
    w, weights = _collect(p, times, cfg)
    y = w + p.mu * (-np.expm1(-p.alpha * times))[None, :]
    return SimulationResult(y, weights, _ess_diagnostics(weights, cfg.paths))


def simulate_terminal(p: ModelParams, T: float, cfg: SimConfig) -> SimulationResult:
    """Y_T draws, shape (paths,)."""
    res = simulate_logprices(p, [T], cfg)
    res.values = res.values[:, 0]
    return res


def simulate_returns_at(p: ModelParams, grid, j: int, cfg: SimConfig) -> SimulationResult:
    """Draws of the single log-return X_{jD} = Y_{(j+1)D} - Y_{jD}."""
    delta = _delta_of(grid)
    if j < 0:
        raise InputError("observation index must be >= 0")
    times = np.array([(j + 1) * delta]) if j == 0 else np.array([j * delta, (j + 1) * delta])
    res = simulate_logprices(p, times, cfg)
    y = res.values
    res.values = y[:, -1] - (y[:, 0] if j > 0 else 0.0)
    return res


def simulate_eta(p: ModelParams, grid, j: int, cfg: SimConfig) -> SimulationResult:
    """Draws of the pure-jump part of X_{jD}."""
    if p.lam <= 0:
        raise InputError("eta is defined for models with jumps")
    q = ModelParams(p.alpha, 0.0, 0.0, p.lam, p.jumps)
    return simulate_returns_at(q, grid, j, cfg)


def simulate_logreturn_paths(p: ModelParams, grid: SeriesGrid, cfg: SimConfig) -> SimulationResult:
    """Log-return series X_{jD}, j = 1..n, for every path; values shape (paths, n)."""
    d, n = grid.delta, grid.n
    times = d * np.arange(1, n + 2)
    res = simulate_logprices(p, times, cfg)
    res.values = np.diff(res.values, axis=1)
    return res


def simulate_logreturns(p: ModelParams, grid: SeriesGrid, cfg: SimConfig | None = None):
    """One simulated log-return series with j = 1..n (historic measure)."""
    from .data import LogReturnSeries

    cfg = cfg or SimConfig(paths=1)
    if cfg.paths != 1:
        cfg = SimConfig(paths=1, seed=cfg.seed, measure=cfg.measure, theta=cfg.theta, tilt=cfg.tilt)
    res = simulate_logreturn_paths(p, grid, cfg)
    if res.weights is not None:
        raise InputError("a single series cannot carry importance weights; use tilt='direct'")
    return LogReturnSeries(res.values[0], grid.delta)


def simulate_prices(p: ModelParams, grid: SeriesGrid, S0: float, seed: int = 0) -> np.ndarray:
    """Prices S_0 e^{Y_t} observed at t = D, 2D, ..., (n+1)D (historic measure, one path).

    Their consecutive log-ratios are X_{jD} for j = 1..n, matching the
    default indexing of LogReturnSeries.
    """
    times = grid.delta * np.arange(1, grid.n + 2)
    res = simulate_logprices(p, times, SimConfig(paths=1, seed=seed))
    return S0 * np.exp(res.values[0])


def mc_price_call(p: ModelParams, mkt, K, cfg: SimConfig | None = None, theta: float | None = None):
    """Discounted Monte-Carlo call price(s) under the Esscher measure.

    Returns:
        (price, standard_error, diagnostics) with arrays shaped like ``K``.
    """
    from .esscher import solve_theta

    if theta is None:
        theta = cfg.theta if (cfg is not None and cfg.theta is not None) else solve_theta(p, mkt).theta_gs
    base = cfg or SimConfig()
    cfg = SimConfig(paths=base.paths, seed=base.seed, measure="esscher", theta=theta,
                    tilt=base.tilt, chunk=base.chunk)
    K = np.atleast_1d(np.asarray(K, dtype=float))
    if np.any(K <= 0):
        raise InputError("strikes must be positive")
    disc = math.exp(-mkt.r * mkt.T)
    s1 = np.zeros(K.size)
    s2 = np.zeros(K.size)
    ws = wq = 0.0
    n = 0
    for w, wt in _iter_blocks(p, np.array([mkt.T]), cfg):
        st = mkt.S0 * np.exp(w[:, 0] + p.mu * (-math.expm1(-p.alpha * mkt.T)))
        pay = np.maximum(st[:, None] - K[None, :], 0.0)
        if wt is not None:
            pay *= wt[:, None]
            ws += float(wt.sum())
            wq += float(np.dot(wt, wt))
        s1 += pay.sum(axis=0)
        s2 += (pay * pay).sum(axis=0)
        n += w.shape[0]
    mean = s1 / n
    var = np.maximum(s2 / n - mean * mean, 0.0) * n / (n - 1)
    diag = {"theta": float(theta), "paths": n}
    if wq > 0:
        ess = ws * ws / wq
        diag.update(ess=ess, ess_fraction=ess / n)
        if ess < ESS_WARN_FRACTION * n:
            warnings.warn(f"importance weights degenerate: ESS {ess:.0f} of {n}", WeightDegeneracyWarning,
                          stacklevel=2)
    return disc * mean, disc * np.sqrt(var / n), diag


def write_paths_csv(path, times, values) -> None:
    """Dump simulated log-price paths as CSV with columns path_id, t, Y_t."""
    times = np.asarray(times, dtype=float)
    values = np.atleast_2d(values)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["path_id", "t", "Y_t"])
        for i, row in enumerate(values):
            for t, y in zip(times, row):
                wr.writerow([i, repr(float(t)), repr(float(y))])
