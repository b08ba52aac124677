"""Esscher martingale condition and its root.

The pricing measure Q^theta is the Esscher transform of the driving Levy
process. ``theta`` is pinned by requiring ``E_theta[S_T] = S_0 e^{rT}`` at the
contract horizon ``T``:

    int_0^T l^theta_V(e^{-alpha (T-s)}) ds = r T - mu (1 - e^{-alpha T}),

with ``l^theta_V(z) = l_V(z + theta) - l_V(theta)``. The left side is strictly
increasing in theta (convexity of ``l_V``), so the root is unique when it
exists.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from ._quad import DEFAULT_TOL
from .errors import DomainError, InputError, NoRootError, NumericalError
from .model import DoubleExponentialJumps, ModelParams, check_theta, jump_mgf, jump_path_integral

THETA_XTOL = 1e-12
RESIDUAL_TOL = 1e-10
KOU_MARGIN = 1e-6
MAX_EXPANSIONS = 60


@dataclass(frozen=True)
class MarketParams:
    """Risk-free rate ``r``, maturity ``T`` and spot ``S0``."""

    r: float
    T: float
    S0: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.r, self.T, self.S0)):
            raise InputError("market parameters must be finite")
        if self.r < 0:
            raise InputError(f"r must be nonnegative, got {self.r}")
        if self.T <= 0:
            raise InputError(f"T must be positive, got {self.T}")
        if self.S0 <= 0:
            raise InputError(f"S0 must be positive, got {self.S0}")

    @property
    def x0(self) -> float:
        return math.log(self.S0)


@dataclass(frozen=True)
class EsscherSolution:
    theta_gs: float
    residual: float
    iterations: int
    bracket: tuple[float, float]
    diagnostics: dict = field(default_factory=dict)


def tilted_exponent_integral(p: ModelParams, T: float, theta: float, tol: float = DEFAULT_TOL) -> float:
    """int_0^T l^theta_V(e^{-alpha (T-s)}) ds."""
    check_theta(p, theta)
    if p.lam > 0 and isinstance(p.jumps, DoubleExponentialJumps) and theta + 1 >= p.jumps.eta1:
        raise DomainError(f"theta={theta} makes E[exp((theta+1) xi)] infinite; need theta < eta1 - 1")
    a, s2 = p.alpha, p.sigma**2
    out = s2 * (-math.expm1(-2 * a * T)) / (4 * a) + s2 * theta * (-math.expm1(-a * T)) / a
    if p.lam > 0:
        # phi_xi(-i theta - i y) = M(theta + y)
        integ = jump_path_integral(p.jumps, -1j * theta, np.array([-1j]), T, a, tol)[0]
        out += p.lam * (integ.real - jump_mgf(p, theta) * T)
    return float(out)


def martingale_residual(p: ModelParams, mkt: MarketParams, theta: float, tol: float = DEFAULT_TOL) -> float:
    """Signed defect of the martingale condition at horizon T."""
    T = mkt.T
    return tilted_exponent_integral(p, T, theta, tol) - (mkt.r * T + p.mu * math.expm1(-p.alpha * T))


def bsch_theta_closed_form(p: ModelParams, mkt: MarketParams) -> float:
    """Closed-form Esscher parameter of the pure-diffusion model."""
    if p.lam > 0:
        raise InputError("closed form applies to the model without jumps")
    if p.sigma == 0:
        raise InputError("closed form needs sigma > 0")
    a, s2, T = p.alpha, p.sigma**2, mkt.T
    one_m = -math.expm1(-a * T)
    return (a / s2) * (mkt.r * T / one_m - s2 * (1 + math.exp(-a * T)) / (4 * a) - p.mu)


def theta_domain(p: ModelParams) -> tuple[float, float]:
    """Closed search interval for theta (finite only for double-exponential jumps)."""
    if p.lam > 0 and isinstance(p.jumps, DoubleExponentialJumps):
        return (-p.jumps.eta2 + KOU_MARGIN, p.jumps.eta1 - 1 - KOU_MARGIN)
    return (-math.inf, math.inf)


def solve_theta(p: ModelParams, mkt: MarketParams, xtol: float = THETA_XTOL,
                residual_tol: float = RESIDUAL_TOL, quad_tol: float = DEFAULT_TOL,
                monotone_check: bool = True) -> EsscherSolution:
    """Find theta_GS with |martingale_residual| < residual_tol.

    Brackets by doubling outward from [-1, 1] inside the admissible domain,
    then refines with Brent's method.
    """
    if p.sigma == 0 and p.lam == 0:
        raise NoRootError("degenerate model: the residual does not depend on theta")
    lo_dom, hi_dom = theta_domain(p)
    if lo_dom >= hi_dom:
        raise NoRootError("empty admissible theta interval (eta1 <= 1)", scanned=(lo_dom, hi_dom))

    def f(th):
        return martingale_residual(p, mkt, th, quad_tol)

    lo, hi = max(-1.0, lo_dom), min(1.0, hi_dom)
    flo, fhi = f(lo), f(hi)
    expansions = 0
    while flo * fhi > 0:
        if expansions >= MAX_EXPANSIONS or (lo <= lo_dom and hi >= hi_dom):
            raise NoRootError(
                f"no sign change of the martingale residual on [{lo}, {hi}]", scanned=(lo, hi)
            )
        width = hi - lo
        # residual is increasing: move the side that cannot contain the root
        if fhi < 0:
            lo, flo = hi, fhi
            hi = min(hi + width, hi_dom)
            fhi = f(hi)
        else:
            hi, fhi = lo, flo
            lo = max(lo - width, lo_dom)
            flo = f(lo)
        expansions += 1

    if flo == 0:
        root, iters = lo, 0
    elif fhi == 0:
        root, iters = hi, 0
    else:
        root, info = brentq(f, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=200,
                            full_output=True, disp=False)
        if not info.converged:
            raise NumericalError(f"Brent iteration failed: {info.flag}")
        iters = info.iterations
    res = f(root)
    if not abs(res) < residual_tol:
        raise NumericalError(
            f"martingale residual {res:.3e} above tolerance {residual_tol:.1e}", error_estimate=abs(res)
        )
    diag = {"expansions": expansions}
    if monotone_check:
        grid = np.linspace(lo, hi, 64)
        vals = np.array([f(x) for x in grid])
        diag["monotone"] = bool(np.all(np.diff(vals) >= -1e-12))
        diag["sign_changes"] = int(np.sum(np.diff(np.sign(vals)) != 0))
    return EsscherSolution(float(root), abs(res), int(iters), (float(lo), float(hi)), diag)
