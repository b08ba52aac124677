"""Densities of log-returns by Fourier inversion, log-likelihood and MLE.

``X_{jD} = beta_j + eta_j`` where ``beta_j`` is Gaussian with mean
``mu (1-e^{-aD}) e^{-ajD}`` and variance ``sigma^2 E_{j,2} / (2a)``, and
``eta_j`` collects the jumps. ``eta_j`` has an atom ``e^{-lam (j+1) D}`` at
zero (no jump in [0, (j+1)D]) plus a diffuse part.

Densities are computed as

    f(x) = (1/pi) int_0^inf Re[e^{-iux} phi(u)] du

with the trapezoid rule on [0, U]. The step ``h = 2 pi / P`` is set by the
period ``P`` that the rule implicitly imposes on the density, which must
exceed the support of the law plus the evaluation range.

Two modes:
    "normalized": the inverse transform of the exact CF (a proper density).
    "paper-literal": the displayed formulas with the prefactor
        e^{-lam (j+1) D}(1 - e^{-lam (j+1) D}) and variance sigma^2 E_{j,2}/(4a);
        kept for comparison only, it does not integrate to one.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq, minimize, minimize_scalar
from scipy.stats import poisson

from . import _kernels
from .calibration import CalibrationResult, ParamPacker, default_init, numeric_hessian
from .data import LogReturnSeries
from .errors import GridError, InputError
from .model import (
    DoubleExponentialJumps,
    GaussianJumps,
    ModelParams,
    _delta_of,
    cf_logreturn_table,
    dejk_dalpha,
    ejk,
    log_cf_logreturn_table,
)
from .moments import logreturn_cumulants

DENSITY_FLOOR = 1e-300
TAIL_TOL = 1e-12
MAX_NODES = 2**20
TABLE_ENTRIES = 2_000_000  # complex CF-table entries held at once in the likelihood
MODES = ("normalized", "paper-literal")


@dataclass(frozen=True)
class DensityConfig:
    """Fourier-inversion settings.

    Attributes:
        u_max: Truncation of the frequency integral; chosen automatically when None.
        nodes: Minimum number of frequency nodes (power of two, >= 256).
        mode: "normalized" or "paper-literal".
        tail_tol: Required bound on the integrand at ``u_max``.
    """

    u_max: float | None = None
    nodes: int = 256
    mode: str = "normalized"
    tail_tol: float = TAIL_TOL

    def __post_init__(self):
        if self.u_max is not None and not self.u_max > 0:
            raise InputError(f"u_max must be positive, got {self.u_max}")
        if self.nodes < 256 or self.nodes & (self.nodes - 1):
            raise InputError(f"nodes must be a power of two >= 256, got {self.nodes}")
        if self.mode not in MODES:
            raise InputError(f"mode must be one of {MODES}, got {self.mode!r}")


@dataclass(frozen=True)
class BetaEtaDecomposition:
    mu_beta: float
    var_beta: float
    j: int


def beta_eta(p: ModelParams, grid, j: int) -> BetaEtaDecomposition:
    """Gaussian part of X_{jD}: mean and variance (exact, from the CF)."""
    delta = _delta_of(grid)
    a = p.alpha
    mu_b = p.mu * (-math.expm1(-a * delta)) * math.exp(-a * j * delta)
    return BetaEtaDecomposition(mu_b, p.sigma**2 * ejk(a, delta, j, 2) / (2 * a), j)


# --------------------------------------------------------------------------
# Grid selection
# --------------------------------------------------------------------------


def _jump_tail(p: ModelParams, delta: float) -> float:
    """Half-width beyond which the jump part of X_{jD} has negligible mass.

    Jumps inside the last interval enter with weight up to one; older jumps
    are damped by at most c = 1 - e^{-a D} and are bounded through their
    mean and variance.
    """
    if p.lam <= 0:
        return 0.0
    n_recent = int(poisson.isf(1e-16, p.lam * delta)) + 1
    jm = p.jumps
    if isinstance(jm, GaussianJumps):
        recent = n_recent * abs(jm.mu) + 8.5 * jm.sigma * math.sqrt(n_recent)
    else:
        recent = (37.0 + 3 * n_recent) / min(jm.eta1, jm.eta2)
    c = -math.expm1(-p.alpha * delta)
    m1, m2 = abs(p.jumps.moment(1)), p.jumps.moment(2)
    old = 12.0 * math.sqrt(p.lam * m2 * c * c / (2 * p.alpha)) + p.lam * m1 * c / p.alpha + c * recent
    return recent + old


def _period(p: ModelParams, delta: float, js: np.ndarray, spread: float) -> float:
    """Period of the trapezoid rule covering the law plus ``spread``."""
    kap = logreturn_cumulants(p, delta, js)
    sd_beta = math.sqrt(float(np.max(p.sigma**2 * ejk(p.alpha, delta, js, 2) / (2 * p.alpha))))
    half = 8.5 * sd_beta + _jump_tail(p, delta)
    mean_shift = float(np.max(np.abs(kap[0])))
    return 2.0 * (half + mean_shift + spread)


def _u_max_gaussian(var: float, tail_tol: float) -> float:
    return math.sqrt(2.0 * math.log(1.0 / tail_tol) / var) * 1.05


def _freq_grid(period: float, u_max: float, min_nodes: int):
    h = 2 * math.pi / period
    K = max(int(math.ceil(u_max / h)), min_nodes - 1)
    if K + 1 > MAX_NODES:
        raise GridError(f"inversion needs {K + 1} frequency nodes (limit {MAX_NODES})",
                        suggestion={"u_max": MAX_NODES * h})
    u = h * np.arange(K + 1)
    w = np.ones(K + 1)
    w[0] = 0.5
    return h, u, w


# --------------------------------------------------------------------------
# Densities
# --------------------------------------------------------------------------


def _invert(x, phi_row, u, w, h, method):
    """f(x) = (h/pi) sum_k w_k Re[e^{-i u_k x} phi_k] for one CF row."""
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    if method == "auto":
        method = "fft" if flat.size > 512 else "direct"
    if method == "direct":
        rows = np.zeros(flat.size, dtype=np.int64)
        vals = _kernels.fourier_cos_sums(flat, rows, u, w, phi_row.real[None, :].copy(),
                                         phi_row.imag[None, :].copy())
        return (h / math.pi * vals).reshape(x.shape)
    if method != "fft":
        raise InputError(f"unknown inversion method {method!r}")
    period = 2 * math.pi / h
    lo, hi = float(flat.min()), float(flat.max())
    if hi - lo > period:
        raise GridError("evaluation range exceeds the inversion period")
    # one period sampled at ~1/32 of the Nyquist spacing pi/U, fine enough for cubic splines
    N = 1 << int(math.ceil(math.log2(32 * u.size)))
    dx = period / N
    x_start = lo - 4 * dx
    a = np.zeros(N, dtype=complex)
    a[: u.size] = w * phi_row * np.exp(-1j * u * x_start)
    fx = h / math.pi * np.fft.fft(a).real
    xs = x_start + dx * np.arange(N)
    m = int(math.ceil((hi - x_start) / dx)) + 4
    spline = CubicSpline(xs[: m + 1], fx[: m + 1])
    return spline(x)


def density_logreturn(p: ModelParams, grid, j: int, x, cfg: DensityConfig | None = None, method: str = "auto"):
    """Density of X_{jD} at x (historic measure)."""
    cfg = cfg or DensityConfig()
    if p.sigma <= 0:
        raise InputError("density_logreturn needs sigma > 0")
    delta = _delta_of(grid)
    x = np.asarray(x, dtype=float)
    js = np.array([j])
    spread = float(np.max(np.abs(x - logreturn_cumulants(p, delta, j)[0]))) if x.size else 0.0
    period = _period(p, delta, js, spread)
    var_lit = p.sigma**2 * ejk(p.alpha, delta, j, 2) / (4 * p.alpha)
    var = 2 * var_lit if cfg.mode == "normalized" else var_lit
    u_max = cfg.u_max or _u_max_gaussian(var, cfg.tail_tol)
    h, u, w = _freq_grid(period, u_max, cfg.nodes)
    logphi = log_cf_logreturn_table(p, 0.0, delta, js, u)[0]
    if cfg.mode == "paper-literal":
        logphi = _literal_adjust(p, delta, js, u, logphi[None, :])[0]
    phi = np.exp(logphi)
    tail = float(np.abs(phi[-1]))
    if tail > cfg.tail_tol:
        raise GridError(f"integrand {tail:.2e} at u_max={u[-1]:.4g} above {cfg.tail_tol:.0e}",
                        suggestion={"u_max": 2 * u[-1]})
    out = _invert(x, phi, u, w, h, method)
    if cfg.mode == "paper-literal":
        lt = p.lam * (j + 1) * delta
        out = out * math.exp(-lt) * (-math.expm1(-lt)) * 2 * math.pi
    return np.maximum(out, 0.0) if out.ndim else max(float(out), 0.0)


def density_eta(p: ModelParams, grid, j: int, x, cfg: DensityConfig | None = None, method: str = "auto"):
    """Atom at zero and diffuse density of the jump part eta_j.

    Returns:
        (atom_mass, diffuse_density_at_x).
    """
    cfg = cfg or DensityConfig()
    if p.lam <= 0:
        raise InputError("eta_j exists only for models with jumps")
    delta = _delta_of(grid)
    x = np.asarray(x, dtype=float)
    lt = p.lam * (j + 1) * delta
    atom = math.exp(-lt)
    q = ModelParams(p.alpha, 0.0, 0.0, p.lam, p.jumps)
    js = np.array([j])
    spread = float(np.max(np.abs(x))) if x.size else 0.0
    period = _period(q, delta, js, spread)
    h = 2 * math.pi / period

    def diffuse_cf(u):
        return np.exp(log_cf_logreturn_table(q, 0.0, delta, js, u)[0]) - atom

    if cfg.mode == "paper-literal":
        # literal integrand exp(lam (K1 + K2)) tends to one at high frequency
        def diffuse_cf(u):  # noqa: F811
            return np.exp(log_cf_logreturn_table(q, 0.0, delta, js, u)[0] + lt)

    if cfg.u_max is not None:
        u_max = cfg.u_max
    else:
        u_max = max(cfg.nodes * h, 50.0 / max(_eta_scale(q, delta, j), 1e-300))
        while abs(diffuse_cf(np.array([u_max]))[0]) > cfg.tail_tol and u_max < MAX_NODES * h:
            u_max *= 2
    probe = abs(diffuse_cf(np.array([u_max]))[0])
    if probe > cfg.tail_tol:
        raise GridError(f"diffuse integrand {probe:.2e} at u_max={u_max:.4g} above {cfg.tail_tol:.0e}; "
                        "the transform decays too slowly for a truncated inversion",
                        suggestion={"u_max": 2 * u_max})
    hh, u, w = _freq_grid(period, u_max, cfg.nodes)
    phi = diffuse_cf(u)
    tail = float(np.max(np.abs(phi[-8:])))
    if tail > cfg.tail_tol:
        raise GridError(f"diffuse integrand {tail:.2e} at u_max={u[-1]:.4g} above {cfg.tail_tol:.0e}",
                        suggestion={"u_max": 2 * u[-1]})
    out = _invert(x, phi, u, w, hh, method)
    if cfg.mode == "paper-literal":
        out = out * atom * (-math.expm1(-lt))
    out = np.maximum(out, 0.0) if np.ndim(out) else max(float(out), 0.0)
    return atom, out


def _eta_scale(q: ModelParams, delta: float, j: int) -> float:
    """Smallest length scale of eta_j: jump scale times the decay weight of old jumps."""
    jm = q.jumps
    s = jm.sigma if isinstance(jm, GaussianJumps) else 1.0 / max(jm.eta1, jm.eta2)
    c = -math.expm1(-q.alpha * delta)
    return s * (c * math.exp(-q.alpha * j * delta) if j > 0 else 1.0)


def _literal_adjust(p, delta, js, u, logphi):
    """Turn log CF rows into the literal integrand exponent (variance sigma^2 E/(4a), no compensator)."""
    e2 = ejk(p.alpha, delta, js, 2)
    corr = np.multiply.outer(e2, p.sigma**2 * u * u / (8 * p.alpha))
    out = logphi + corr
    if p.lam > 0:
        out = out + p.lam * ((js + 1) * delta)[:, None]
    return out


# --------------------------------------------------------------------------
# Likelihood
# --------------------------------------------------------------------------


def gaussian_loglik_terms(x: LogReturnSeries, p: ModelParams) -> np.ndarray:
    """Per-observation log-density of the jump-free model."""
    a, d = p.alpha, x.delta
    m = p.mu * (-math.expm1(-a * d)) * np.exp(-a * d * x.j)
    v = p.sigma**2 * ejk(a, d, x.j, 2) / (2 * a)
    return -0.5 * np.log(2 * math.pi * v) - (x.values - m) ** 2 / (2 * v)


def loglik_detail(x: LogReturnSeries, p: ModelParams, cfg: DensityConfig | None = None,
                  method: str = "auto") -> tuple[float, dict]:
    """Log-likelihood and diagnostics (clipped observations, grid).

    Args:
        method: "auto" (closed form when lam = 0), "fourier" or "gaussian".
    """
    cfg = cfg or DensityConfig()
    if method == "auto":
        method = "gaussian" if (p.lam == 0 and cfg.mode == "normalized") else "fourier"
    if method == "gaussian":
        if p.lam > 0:
            raise InputError("closed-form likelihood needs lam = 0")
        if p.sigma <= 0:
            raise InputError("likelihood needs sigma > 0")
        terms = gaussian_loglik_terms(x, p)
        return math.fsum(terms), {"method": "gaussian", "clipped": []}
    if method != "fourier":
        raise InputError(f"unknown likelihood method {method!r}")
    if p.sigma <= 0:
        raise InputError("Fourier likelihood needs sigma > 0")
    if cfg.mode == "paper-literal" and p.lam <= 0:
        raise InputError("the literal likelihood is undefined for lam = 0 (log of zero)")

    delta = x.delta
    js, rows = np.unique(x.j, return_inverse=True)
    kap1 = logreturn_cumulants(p, delta, js)[0]
    spread = float(np.max(np.abs(x.values - kap1[rows])))
    period = _period(p, delta, js, spread)
    var_min = float(np.min(p.sigma**2 * ejk(p.alpha, delta, js, 2) / (2 * p.alpha)))
    if cfg.mode == "paper-literal":
        var_min /= 2
    u_max = cfg.u_max or _u_max_gaussian(var_min, cfg.tail_tol)
    h, u, w = _freq_grid(period, u_max, cfg.nodes)

    def table(ub):
        logphi = log_cf_logreturn_table(p, 0.0, delta, js, ub)
        if cfg.mode == "paper-literal":
            logphi = _literal_adjust(p, delta, js, ub, logphi)
        return np.exp(logphi)

    tail = float(np.max(np.abs(table(u[-1:]))))
    if tail > cfg.tail_tol:
        raise GridError(f"integrand {tail:.2e} at u_max={u[-1]:.4g} above {cfg.tail_tol:.0e}",
                        suggestion={"u_max": 2 * u[-1]})
    # the CF table (and the jump panel table behind it) is built one frequency
    # block at a time to bound memory; the inversion sum is additive over u
    step = max(1, TABLE_ENTRIES // (int(js.max()) + 1 + js.size))
    rows64 = rows.astype(np.int64)
    vals = np.zeros(x.n)
    for s in range(0, u.size, step):
        phi = table(u[s: s + step])
        vals += _kernels.fourier_cos_sums(x.values, rows64, u[s: s + step], w[s: s + step],
                                          np.ascontiguousarray(phi.real), np.ascontiguousarray(phi.imag))
    vals *= h / math.pi
    if cfg.mode == "paper-literal":
        lt = p.lam * (js[rows] + 1) * delta
        # J(x) = 2 pi f(x); prefactor e^{-lt}(1 - e^{-lt})
        logs = np.log(np.maximum(2 * math.pi * vals, DENSITY_FLOOR)) - lt + np.log(-np.expm1(-lt))
        clipped = np.nonzero(vals <= DENSITY_FLOOR)[0]
    else:
        clipped = np.nonzero(vals <= DENSITY_FLOOR)[0]
        logs = np.log(np.maximum(vals, DENSITY_FLOOR))
    info = {"method": "fourier", "mode": cfg.mode, "clipped": clipped.tolist(), "nodes": int(u.size),
            "u_max": float(u[-1]), "period": period}
    if clipped.size:
        warnings.warn(f"density below floor at {clipped.size} observations: {clipped[:10].tolist()}",
                      RuntimeWarning, stacklevel=2)
    return math.fsum(logs), info


def loglik(x: LogReturnSeries, p: ModelParams, cfg: DensityConfig | None = None, method: str = "auto") -> float:
    """Log-likelihood of the observations as a product of their marginal densities."""
    return loglik_detail(x, p, cfg, method)[0]


# --------------------------------------------------------------------------
# Pure-diffusion likelihood equations
# --------------------------------------------------------------------------


def bsch_score(x: LogReturnSeries, p: ModelParams) -> tuple[float, float, float]:
    """Analytic (dl/dsigma^2, dl/dmu, dl/dalpha) of the jump-free log-likelihood."""
    if p.lam > 0:
        raise InputError("bsch_score needs lam = 0")
    a, d, s2 = p.alpha, x.delta, p.sigma**2
    j = x.j
    e = ejk(a, d, j, 2)
    de = dejk_dalpha(a, d, j, 2)
    v = s2 * e / (2 * a)
    z = np.exp(-a * d * j)
    g = (-math.expm1(-a * d)) * z
    m = p.mu * g
    r = x.values - m
    d_s2 = math.fsum(r * r / v - 1) / (2 * s2)
    d_mu = math.fsum(r * g / v)
    dm_da = p.mu * ((j + 1) * d * np.exp(-a * d * (j + 1)) - j * d * z)
    dlogv = de / e - 1 / a
    d_a = math.fsum(-0.5 * dlogv + r * dm_da / v + r * r / (2 * v) * dlogv)
    return d_s2, d_mu, d_a


def bsch_mu_hat(x: LogReturnSeries, alpha: float) -> float:
    """Root of dl/dmu = 0 for given alpha."""
    d = x.delta
    e = ejk(alpha, d, x.j, 2)
    g = (-math.expm1(-alpha * d)) * np.exp(-alpha * d * x.j)
    return math.fsum(x.values * g / e) / math.fsum(g * g / e)


def bsch_sigma2_hat(x: LogReturnSeries, alpha: float, mu: float) -> float:
    """Root of dl/dsigma^2 = 0 for given (alpha, mu)."""
    d = x.delta
    e = ejk(alpha, d, x.j, 2)
    g = (-math.expm1(-alpha * d)) * np.exp(-alpha * d * x.j)
    return math.fsum((x.values - mu * g) ** 2 * 2 * alpha / e) / x.n


def _bsch_profile(x: LogReturnSeries, log_a: float) -> tuple[float, ModelParams]:
    a = math.exp(log_a)
    mu = bsch_mu_hat(x, a)
    s2 = bsch_sigma2_hat(x, a, mu)
    p = ModelParams(a, mu, math.sqrt(s2))
    return math.fsum(gaussian_loglik_terms(x, p)), p


def _bsch_mle(x: LogReturnSeries) -> tuple[ModelParams, dict]:
    lo, hi = math.log(1e-4), math.log(500.0)
    grid = np.linspace(lo, hi, 241)
    vals = np.array([_bsch_profile(x, g)[0] for g in grid])
    i = int(np.argmax(vals))
    a_lo, a_hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    res = minimize_scalar(lambda g: -_bsch_profile(x, g)[0], bounds=(a_lo, a_hi), method="bounded",
                          options={"xatol": 1e-12})
    p = _bsch_profile(x, float(res.x))[1]

    # polish on the alpha score, which is zero at an interior optimum
    def score_a(g):
        return bsch_score(x, _bsch_profile(x, g)[1])[2]

    g0 = float(res.x)
    boundary = g0 - lo < 1e-6 or hi - g0 < 1e-6
    if not boundary:
        step = 1e-3
        a1, a2 = max(g0 - step, lo), min(g0 + step, hi)
        s1, s2 = score_a(a1), score_a(a2)
        if s1 * s2 < 0:
            g0 = brentq(score_a, a1, a2, xtol=1e-15, rtol=1e-15)
            p = _bsch_profile(x, g0)[1]
    return p, {"at_alpha_bound": bool(boundary), "profile_evaluations": int(grid.size + res.nfev)}


# --------------------------------------------------------------------------
# Calibration
# --------------------------------------------------------------------------


def mle_fit(x: LogReturnSeries, model: str, init: ModelParams | None = None, fixed: dict | None = None,
            cfg: DensityConfig | None = None, maxiter: int = 200, std_errors: bool = True) -> CalibrationResult:
    """Maximum-likelihood fit.

    The jump-free model is solved through its profile likelihood in alpha (mu
    and sigma^2 have closed forms given alpha). Jump models maximize the
    Fourier-inversion likelihood with L-BFGS-B over the parameter box using
    finite-difference gradients with steps 1e-6 times the parameter scale.
    """
    cfg = cfg or DensityConfig()
    if model == "bsch" and not fixed and cfg.mode == "normalized":
        p, diag = _bsch_mle(x)
        ll = loglik(x, p)
        score = bsch_score(x, p)
        diag["scores"] = {"sigma2": score[0], "mu": score[1], "alpha": score[2]}
        diag["gradient_norm"] = float(np.linalg.norm(score))
        se = _bsch_std_errors(x, p) if std_errors else None
        return CalibrationResult("bsch", "mle", p, se, ll, not diag["at_alpha_bound"], diag)

    init = init or default_init(model, x)
    packer = ParamPacker(model, init, fixed)
    x0 = packer.x0()
    scale = np.where(np.abs(x0) > 0, np.abs(x0), 1.0)
    lo, hi = packer.bounds

    def negll(z):
        try:
            return -loglik(x, packer.params(packer.project(z * scale)), cfg)
        except (InputError, GridError):
            return 1e300

    def grad(z, central=False):
        g = np.empty_like(z)
        f0 = None if central else negll(z)
        for i in range(z.size):
            hstep = 1e-6 * max(abs(z[i]), 1.0)
            zp = z.copy()
            zp[i] = min(z[i] + hstep, hi[i] / scale[i])
            zm = z.copy()
            zm[i] = max(z[i] - hstep, lo[i] / scale[i]) if central else z[i]
            if zp[i] == zm[i]:  # forward step blocked by the upper bound
                zm[i] = max(z[i] - hstep, lo[i] / scale[i])
                g[i] = (negll(zp) - negll(zm)) / (zp[i] - zm[i])
                continue
            fm = f0 if (not central and zm[i] == z[i]) else negll(zm)
            g[i] = (negll(zp) - fm) / (zp[i] - zm[i])
        return g

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        res = minimize(negll, x0 / scale, jac=grad, method="L-BFGS-B",
                       bounds=list(zip(lo / scale, hi / scale)),
                       options={"maxiter": maxiter, "ftol": 1e-15, "gtol": 1e-6})
        zhat = res.x
        p_hat = packer.params(packer.project(zhat * scale))
        g = grad(zhat, central=True) / scale
    xh = zhat * scale
    tol_lo = np.where(np.isfinite(lo), lo + 1e-9 * np.maximum(1, np.abs(np.where(np.isfinite(lo), lo, 0))), -np.inf)
    tol_hi = np.where(np.isfinite(hi), hi - 1e-9 * np.maximum(1, np.abs(np.where(np.isfinite(hi), hi, 0))), np.inf)
    free_inside = (xh > tol_lo) & (xh < tol_hi)
    gnorm = float(np.linalg.norm(g[free_inside])) if np.any(free_inside) else 0.0
    diag = {"gradient_norm": gnorm, "nit": int(res.nit), "message": str(res.message),
            "free": list(packer.free), "fixed": dict(packer.fixed), "at_bound": [
                k for k, inside in zip(packer.free, free_inside) if not inside]}
    se = None
    if std_errors:
        try:
            H = numeric_hessian(lambda v: -negll(v / scale), xh, 1e-4 * np.maximum(np.abs(xh), 1e-3))
            cov = np.linalg.pinv(-H)
            se = {k: float(math.sqrt(cov[i, i])) if cov[i, i] > 0 else None for i, k in enumerate(packer.free)}
        except (ValueError, np.linalg.LinAlgError):
            se = None
    return CalibrationResult(model, "mle", p_hat, se, float(-res.fun), bool(res.success and gnorm < 1e-6 * max(1, x.n)), diag)


def _bsch_std_errors(x: LogReturnSeries, p: ModelParams) -> dict:
    v = np.array([p.alpha, p.mu, p.sigma])

    def ll(z):
        if z[0] <= 0 or z[2] <= 0:
            return -1e300
        return math.fsum(gaussian_loglik_terms(x, ModelParams(z[0], z[1], z[2])))

    steps = 1e-4 * np.maximum(np.abs(v), [1e-3, 1e-3 * max(abs(p.sigma), 1e-3), 1e-3])
    H = numeric_hessian(ll, v, steps)
    cov = np.linalg.pinv(-H)
    return {k: (float(math.sqrt(cov[i, i])) if cov[i, i] > 0 else None)
            for i, k in enumerate(("alpha", "mu", "sigma"))}
