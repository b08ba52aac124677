"""Moments of log-returns and the method-of-moments calibrator.

Under the historic measure the cumulants of X_{jD} are

    kappa_1 = (1 - e^{-aD}) e^{-ajD} (mu + lam E xi / a),
    kappa_2 = (sigma^2 + lam E xi^2) E_{j,2} / (2a),
    kappa_k = lam E xi^k E_{j,k} / (k a),   k = 3, 4,

and raw moments follow from the usual cumulant-to-moment relations. Each raw
moment is a polynomial of degree <= 4 in z = e^{-ajD}, so its average over
j = 1..n is a combination of geometric sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.optimize import least_squares

from .calibration import CalibrationResult, ParamPacker, default_init
from .data import LogReturnSeries
from .errors import InputError
from .model import ModelParams, SeriesGrid, _delta_of, ejk, jump_moment


@dataclass(frozen=True)
class MomentSet:
    """Raw moments m1..m4 (None where not computed)."""

    m1: float | None = None
    m2: float | None = None
    m3: float | None = None
    m4: float | None = None

    def get(self, k: int) -> float:
        v = (self.m1, self.m2, self.m3, self.m4)[k - 1]
        if v is None:
            raise InputError(f"moment of order {k} not available")
        return v

    def as_array(self, ks=(1, 2, 3, 4)) -> np.ndarray:
        return np.array([self.get(k) for k in ks])


@dataclass(frozen=True)
class T1Derivatives:
    """Derivatives at 0 of the log-CF of X_{jD}: d_k = i^k kappa_k."""

    d1: complex
    d2: complex
    d3: complex
    d4: complex


def _jump_coefs(p: ModelParams) -> tuple[float, float, float, float]:
    if p.lam > 0:
        return tuple(p.lam * jump_moment(p.jumps, k) for k in (1, 2, 3, 4))
    return (0.0, 0.0, 0.0, 0.0)


def logreturn_cumulants(p: ModelParams, grid, j) -> np.ndarray:
    """kappa_1..kappa_4 of X_{jD}; shape (4,) or (4, len(j))."""
    delta = _delta_of(grid)
    a = p.alpha
    l1, l2, l3, l4 = _jump_coefs(p)
    jj = np.asarray(j, dtype=float)
    c = -math.expm1(-a * delta)
    k1 = c * np.exp(-a * delta * jj) * (p.mu + l1 / a)
    k2 = (p.sigma**2 + l2) * ejk(a, delta, jj, 2) / (2 * a)
    k3 = l3 * ejk(a, delta, jj, 3) / (3 * a)
    k4 = l4 * ejk(a, delta, jj, 4) / (4 * a)
    return np.array(np.broadcast_arrays(k1, k2, k3, k4), dtype=float)


def _raw_from_cumulants(k1, k2, k3, k4):
    m1 = k1
    m2 = k2 + k1 * k1
    m3 = k3 + 3 * k2 * k1 + k1**3
    m4 = k4 + 4 * k3 * k1 + 3 * k2 * k2 + 6 * k2 * k1 * k1 + k1**4
    return m1, m2, m3, m4


def theoretical_moment(p: ModelParams, grid, j, k: int):
    """E(X_{jD}^k) under the historic measure, k = 1..4."""
    if k not in (1, 2, 3, 4):
        raise InputError(f"moment order must be 1..4, got {k}")
    out = _raw_from_cumulants(*logreturn_cumulants(p, grid, j))[k - 1]
    return float(out) if np.ndim(out) == 0 else out


def t1_derivatives(p: ModelParams, grid, j: int) -> T1Derivatives:
    kap = logreturn_cumulants(p, grid, j)
    return T1Derivatives(*(1j ** (k + 1) * kap[k] for k in range(4)))


def moments_by_recursion(p: ModelParams, grid, j: int) -> MomentSet:
    """Raw moments via D^k phi = sum_l C(k-1, l) D^{l+1}T D^{k-l-1} phi at 0."""
    d = t1_derivatives(p, grid, j)
    dt = (d.d1, d.d2, d.d3, d.d4)
    dphi = [1.0 + 0j]
    for k in range(1, 5):
        dphi.append(sum(math.comb(k - 1, l) * dt[l] * dphi[k - l - 1] for l in range(k)))
    return MomentSet(*(float((dphi[k] / 1j**k).real) for k in range(1, 5)))


def _moment_polynomials(p: ModelParams, delta: float):
    """Coefficient arrays in z = e^{-ajD} of the raw moments m1..m4."""
    a = p.alpha
    l1, l2, l3, l4 = _jump_coefs(p)
    c = -math.expm1(-a * delta)
    kap = [np.array([0.0, c * (p.mu + l1 / a)])]
    for k, coef in ((2, (p.sigma**2 + l2) / (2 * a)), (3, l3 / (3 * a)), (4, l4 / (4 * a))):
        pk = -math.expm1(-k * a * delta) + (-1) ** k * c**k
        poly = np.zeros(k + 1)
        poly[0] = coef * pk
        poly[k] = -coef * (-1) ** k * c**k
        kap.append(poly)
    k1, k2, k3, k4 = kap
    m1 = k1
    m2 = P.polyadd(k2, P.polymul(k1, k1))
    m3 = P.polyadd(P.polyadd(k3, 3 * P.polymul(k2, k1)), P.polypow(k1, 3))
    m4 = k4
    for term in (4 * P.polymul(k3, k1), 3 * P.polymul(k2, k2), 6 * P.polymul(k2, P.polymul(k1, k1)),
                 P.polypow(k1, 4)):
        m4 = P.polyadd(m4, term)
    return m1, m2, m3, m4


def geometric_average(rate: float, n: int) -> float:
    """(1/n) sum_{j=1}^n e^{-rate*j} for rate >= 0."""
    if rate == 0:
        return 1.0
    return math.exp(-rate) * (-math.expm1(-rate * n)) / (-math.expm1(-rate)) / n


def averaged_moment(p: ModelParams, grid: SeriesGrid, k: int) -> float:
    """(1/n) sum_{j=1}^n E(X_{jD}^k) in closed form."""
    if k not in (1, 2, 3, 4):
        raise InputError(f"moment order must be 1..4, got {k}")
    poly = _moment_polynomials(p, grid.delta)[k - 1]
    rate = p.alpha * grid.delta
    return float(sum(cf * geometric_average(rate * deg, grid.n) for deg, cf in enumerate(poly)))


def empirical_moments(x, kmax: int = 4) -> MomentSet:
    """Raw sample moments (1/n) sum x^k, k = 1..kmax."""
    v = x.values if isinstance(x, LogReturnSeries) else np.asarray(x, dtype=float).ravel()
    if v.size == 0:
        raise InputError("empty series")
    if kmax not in (1, 2, 3, 4):
        raise InputError(f"kmax must be 1..4, got {kmax}")
    vals = [math.fsum(v**k) / v.size for k in range(1, kmax + 1)]
    return MomentSet(*vals)


def default_moment_orders(model: str) -> tuple[int, ...]:
    return (1, 2, 3) if model == "bsch" else (1, 2, 3, 4)


def mom_residuals(p: ModelParams, m_hat: MomentSet, grid: SeriesGrid, orders) -> np.ndarray:
    """(m_hat_k - mu_k(p)) / m_hat_k for the chosen orders."""
    out = []
    for k in orders:
        mk = m_hat.get(k)
        if mk == 0:
            raise InputError(f"empirical moment of order {k} is zero; the weight 1/m_k^2 is undefined")
        out.append((mk - averaged_moment(p, grid, k)) / mk)
    return np.array(out)


def mom_objective(p: ModelParams, m_hat: MomentSet, grid: SeriesGrid, orders=None) -> float:
    orders = orders or default_moment_orders(p.model)
    r = mom_residuals(p, m_hat, grid, orders)
    return float(r @ r)


def mom_fit(x: LogReturnSeries, model: str, init: ModelParams | None = None, fixed: dict | None = None,
            orders=None, max_nfev: int = 2000, target: MomentSet | None = None) -> CalibrationResult:
    """Weighted least-squares moment matching with box constraints.

    Args:
        x: Observed log-returns (their indices must be 1..n).
        model: "bsch", "merton" or "kou".
        init: Starting point; a data-scaled default when None.
        fixed: Parameters held at given values, e.g. ``{"mu_j": 0.0}``.
        orders: Moment orders to match; (1, 2, 3) for bsch, (1, 2, 3, 4) otherwise.
        target: Override the empirical moments (used for self-consistency checks).
    """
    init = init or default_init(model, x)
    packer = ParamPacker(model, init, fixed)
    orders = tuple(orders or default_moment_orders(model))
    grid = SeriesGrid(x.delta, x.n)
    if not np.array_equal(x.j, grid.j):
        raise InputError("method of moments needs observation indices 1..n")
    m_hat = target or empirical_moments(x, max(orders))

    def resid(z):
        return mom_residuals(packer.params(z), m_hat, grid, orders)

    sol = least_squares(resid, packer.x0(), bounds=packer.bounds, method="trf", x_scale="jac",
                        xtol=1e-14, ftol=1e-14, gtol=1e-14, max_nfev=max_nfev)
    p_hat = packer.params(packer.project(sol.x))
    grad = sol.jac.T @ sol.fun * 2
    diag = {
        "gradient_norm": float(np.linalg.norm(grad)),
        "nfev": int(sol.nfev),
        "status": int(sol.status),
        "message": sol.message,
        "orders": list(orders),
        "free": list(packer.free),
        "fixed": dict(packer.fixed),
        "underdetermined": len(orders) < len(packer.free),
    }
    return CalibrationResult(model, "mom", p_hat, None, float(2 * sol.cost), bool(sol.status > 0), diag)
