"""Model types, jump laws and characteristic functions.

The log exchange rate ``Y`` solves ``dY = alpha*(mu - Y) dt + dV`` with
``Y_0 = 0`` and ``V = sigma*B + Z``, where ``Z`` is compound Poisson with
intensity ``lam`` and jump law given by a :class:`GaussianJumps` (Merton) or
:class:`DoubleExponentialJumps` (Kou) object. The pricing measure is the Esscher
transform of the law of ``V`` with parameter ``theta``; ``theta = 0`` is the
historic measure.

Every jump term reduces to a path integral
``int_0^t phi_xi(c + b*exp(-alpha*tau)) dtau``. For double-exponential jumps
it has a closed form; for Gaussian jumps it is computed by adaptive
Gauss-Legendre quadrature in ``tau``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np

from . import _kernels
from ._quad import DEFAULT_MAX_LEVEL, DEFAULT_TOL, decay_integral, integrate_batch
from .errors import DomainError, InputError, NumericalError

_POLE_RTOL = 1e-9


# --------------------------------------------------------------------------
# Jump laws
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class GaussianJumps:
    """Normal jump sizes, N(mu, sigma^2)."""

    mu: float
    sigma: float

    def __post_init__(self):
        if not (math.isfinite(self.mu) and math.isfinite(self.sigma)):
            raise InputError("Gaussian jump parameters must be finite")
        if self.sigma <= 0:
            raise InputError(f"Gaussian jump std must be positive, got {self.sigma}")

    def cf(self, z):
        z = np.asarray(z, dtype=complex)
        return np.exp(1j * self.mu * z - 0.5 * self.sigma**2 * z * z)

    def mgf(self, theta: float) -> float:
        return math.exp(self.mu * theta + 0.5 * self.sigma**2 * theta**2)

    def moment(self, k: int) -> float:
        m, s2 = self.mu, self.sigma**2
        return (m, m * m + s2, m**3 + 3 * m * s2, m**4 + 6 * m * m * s2 + 3 * s2 * s2)[k - 1]

    def theta_bounds(self) -> tuple[float, float]:
        return (-math.inf, math.inf)


@dataclass(frozen=True)
class DoubleExponentialJumps:
    """Kou jumps: Exp(eta1) upward with probability q, Exp(eta2) downward otherwise."""

    eta1: float
    eta2: float
    q: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.eta1, self.eta2, self.q)):
            raise InputError("double-exponential jump parameters must be finite")
        if self.eta1 <= 1:
            raise InputError(f"eta1 must exceed 1, got {self.eta1}")
        if self.eta2 <= 0:
            raise InputError(f"eta2 must be positive, got {self.eta2}")
        if not 0 <= self.q <= 1:
            raise InputError(f"q must lie in [0, 1], got {self.q}")

    def cf(self, z):
        z = np.asarray(z, dtype=complex)
        d1 = self.eta1 - 1j * z
        d2 = self.eta2 + 1j * z
        if np.any(np.abs(d1) < _POLE_RTOL * self.eta1):
            raise DomainError(f"argument too close to the pole z = -i*eta1 = {-1j * self.eta1}")
        if np.any(np.abs(d2) < _POLE_RTOL * self.eta2):
            raise DomainError(f"argument too close to the pole z = i*eta2 = {1j * self.eta2}")
        return self.q * self.eta1 / d1 + (1 - self.q) * self.eta2 / d2

    def mgf(self, theta: float) -> float:
        lo, hi = self.theta_bounds()
        if not lo < theta < hi:
            raise DomainError(f"jump MGF undefined at {theta}; needs {lo} < theta < {hi}")
        return self.q * self.eta1 / (self.eta1 - theta) + (1 - self.q) * self.eta2 / (self.eta2 + theta)

    def moment(self, k: int) -> float:
        return math.factorial(k) * (self.q / self.eta1**k + (-1) ** k * (1 - self.q) / self.eta2**k)

    def theta_bounds(self) -> tuple[float, float]:
        return (-self.eta2, self.eta1)


JumpSpec = Union[GaussianJumps, DoubleExponentialJumps, None]


def jump_cf(jumps: JumpSpec, z):
    """Characteristic function of one jump at a (complex) argument."""
    if jumps is None:
        raise InputError("jump CF requested for a model without jumps")
    return jumps.cf(z)


def jump_moment(jumps: JumpSpec, k: int) -> float:
    """Raw moment E(xi^k), k = 1..4."""
    if jumps is None:
        raise InputError("jump moment requested for a model without jumps")
    if k not in (1, 2, 3, 4):
        raise InputError(f"jump moment order must be 1..4, got {k}")
    return jumps.moment(k)


# --------------------------------------------------------------------------
# Parameters
# --------------------------------------------------------------------------

MODELS = ("bsch", "merton", "kou")

PARAM_NAMES = {
    "bsch": ("alpha", "mu", "sigma"),
    "merton": ("alpha", "mu", "sigma", "lam", "mu_j", "sigma_j"),
    "kou": ("alpha", "mu", "sigma", "lam", "eta1", "eta2", "q"),
}

# Box constraints used by every calibrator.
BOUNDS = {
    "alpha": (1e-4, 500.0),
    "mu": (-np.inf, np.inf),
    "sigma": (1e-8, 10.0),
    "lam": (1e-8, 5000.0),
    "mu_j": (-np.inf, np.inf),
    "sigma_j": (1e-8, 10.0),
    "eta1": (1.0 + 1e-6, 500.0),
    "eta2": (1e-6, 500.0),
    "q": (0.0, 1.0),
}


@dataclass(frozen=True)
class ModelParams:
    """Parameters of the mean-reverting jump-diffusion.

    Attributes:
        alpha: Mean-reversion rate (> 0).
        mu: Mean-reversion level.
        sigma: Diffusion volatility (>= 0).
        lam: Jump intensity (>= 0).
        jumps: Jump-size law, or None for the pure-diffusion model.
    """

    alpha: float
    mu: float
    sigma: float
    lam: float = 0.0
    jumps: JumpSpec = field(default=None)

    def __post_init__(self):
        for name in ("alpha", "mu", "sigma", "lam"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise InputError(f"{name} must be finite, got {v}")
        if self.alpha <= 0:
            raise InputError(f"alpha must be positive, got {self.alpha}")
        if self.sigma < 0:
            raise InputError(f"sigma must be nonnegative, got {self.sigma}")
        if self.lam < 0:
            raise InputError(f"lam must be nonnegative, got {self.lam}")
        if self.lam > 0 and self.jumps is None:
            raise InputError("a positive jump intensity needs a jump law")

    @property
    def model(self) -> str:
        if self.jumps is None:
            return "bsch"
        return "merton" if isinstance(self.jumps, GaussianJumps) else "kou"

    @property
    def has_jumps(self) -> bool:
        return self.lam > 0

    def to_dict(self) -> dict[str, float]:
        d = {"alpha": self.alpha, "mu": self.mu, "sigma": self.sigma}
        if isinstance(self.jumps, GaussianJumps):
            d.update(lam=self.lam, mu_j=self.jumps.mu, sigma_j=self.jumps.sigma)
        elif isinstance(self.jumps, DoubleExponentialJumps):
            d.update(lam=self.lam, eta1=self.jumps.eta1, eta2=self.jumps.eta2, q=self.jumps.q)
        return d

    def to_vector(self) -> np.ndarray:
        d = self.to_dict()
        return np.array([d[k] for k in PARAM_NAMES[self.model]], dtype=float)

    def replace(self, **changes) -> "ModelParams":
        return replace(self, **changes)


def params_from_dict(model: str, d: dict) -> ModelParams:
    """Build ModelParams from a flat name -> value mapping."""
    if model not in MODELS:
        raise InputError(f"unknown model {model!r}; expected one of {MODELS}")
    missing = [k for k in PARAM_NAMES[model] if k not in d]
    if missing:
        raise InputError(f"missing parameters for {model}: {', '.join(missing)}")
    g = {k: float(d[k]) for k in PARAM_NAMES[model]}
    if model == "bsch":
        return ModelParams(g["alpha"], g["mu"], g["sigma"])
    if model == "merton":
        jumps = GaussianJumps(g["mu_j"], g["sigma_j"])
    else:
        jumps = DoubleExponentialJumps(g["eta1"], g["eta2"], g["q"])
    return ModelParams(g["alpha"], g["mu"], g["sigma"], g["lam"], jumps)


def params_from_vector(model: str, vec) -> ModelParams:
    return params_from_dict(model, dict(zip(PARAM_NAMES[model], np.asarray(vec, dtype=float))))


@dataclass(frozen=True)
class SeriesGrid:
    """Sampling design: interval ``delta`` and ``n`` observations j = 1..n."""

    delta: float
    n: int = 1

    def __post_init__(self):
        if not (math.isfinite(self.delta) and self.delta > 0):
            raise InputError(f"sampling interval must be positive, got {self.delta}")
        if self.n < 1:
            raise InputError(f"number of observations must be >= 1, got {self.n}")

    @property
    def j(self) -> np.ndarray:
        return np.arange(1, self.n + 1)


def _delta_of(grid) -> float:
    if isinstance(grid, SeriesGrid):
        return grid.delta
    d = float(grid)
    if not d > 0:
        raise InputError(f"sampling interval must be positive, got {d}")
    return d


# --------------------------------------------------------------------------
# Elementary pieces
# --------------------------------------------------------------------------


def ejk(alpha: float, delta: float, j, k: int):
    """E_{j,k}(alpha) = (1-e^{-k a D}) + (-1)^k (1-e^{-a D})^k (1-e^{-k a j D})."""
    j = np.asarray(j, dtype=float)
    c = -math.expm1(-alpha * delta)
    out = -math.expm1(-k * alpha * delta) + (-1) ** k * c**k * (-np.expm1(-k * alpha * delta * j))
    return out if out.ndim else float(out)


def dejk_dalpha(alpha: float, delta: float, j, k: int = 2):
    """Derivative of E_{j,k} with respect to alpha."""
    j = np.asarray(j, dtype=float)
    c = -math.expm1(-alpha * delta)
    dc = delta * math.exp(-alpha * delta)
    tail = -np.expm1(-k * alpha * delta * j)
    dtail = k * delta * j * np.exp(-k * alpha * delta * j)
    out = k * delta * math.exp(-k * alpha * delta) + (-1) ** k * (k * c ** (k - 1) * dc * tail + c**k * dtail)
    return out if out.ndim else float(out)


def jump_mgf(p: ModelParams, theta: float) -> float:
    """M(theta) = E exp(theta*xi); 1 for the pure-diffusion model."""
    if p.jumps is None:
        return 1.0
    return p.jumps.mgf(theta)


def check_theta(p: ModelParams, theta: float) -> None:
    """Raise DomainError if the Esscher parameter is inadmissible for the jump law."""
    if not math.isfinite(theta):
        raise DomainError(f"Esscher parameter must be finite, got {theta}")
    if p.lam > 0:
        lo, hi = p.jumps.theta_bounds()
        if not lo < theta < hi:
            raise DomainError(f"theta={theta} outside the admissible interval ({lo}, {hi})")


def laplace_exponent(p: ModelParams, z):
    """l_V(z) = sigma^2 z^2 / 2 + lam*(phi_xi(-i z) - 1)."""
    z = np.asarray(z, dtype=complex)
    out = 0.5 * p.sigma**2 * z * z
    if p.lam > 0:
        out = out + p.lam * (p.jumps.cf(-1j * z) - 1.0)
    return out if out.ndim else complex(out)


# --------------------------------------------------------------------------
# Path integrals of the jump CF
# --------------------------------------------------------------------------


def _segment_pole_check(c, b, t, alpha):
    """Raise if c + b*y vanishes for some y in [exp(-alpha*t), 1]."""
    lo = np.exp(-alpha * np.asarray(t, dtype=float))
    bb = np.abs(b) ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        ystar = np.where(bb > 0, np.real(-c * np.conj(b)) / np.where(bb > 0, bb, 1.0), 1.0)
    ystar = np.clip(ystar, lo, 1.0)
    dist = np.abs(c + b * ystar)
    bad = dist <= _POLE_RTOL * np.maximum(np.abs(c), np.abs(b))
    if np.any(bad):
        raise DomainError("integrand pole lies on the integration path")


def rational_path_integral(c, b, t, alpha: float, check: bool = True):
    """int_0^t dtau / (c + b*exp(-alpha*tau)), broadcasting over c, b, t.

    Uses (1/(alpha*c)) * [alpha*t - Log((c+b)/(c+b*e^{-alpha t}))]. The argument
    of the logarithm is the ratio of the end points of a straight segment that
    avoids the origin, so the principal branch is the continuous one.
    """
    c = np.asarray(c, dtype=complex)
    b = np.asarray(b, dtype=complex)
    t = np.asarray(t, dtype=float)
    if check:
        _segment_pole_check(c, b, t, alpha)
    e = np.exp(-alpha * t)
    omega = b * (-np.expm1(-alpha * t)) / (c + b * e)
    return (alpha * t - np.log1p(omega)) / (alpha * c)


def _kou_path_integral(jumps: DoubleExponentialJumps, c, b, t, alpha):
    # phi(z) = q*eta1/(eta1 - i z) + (1-q)*eta2/(eta2 + i z), z = c + b*y
    up = rational_path_integral(jumps.eta1 - 1j * c, -1j * b, t, alpha)
    down = rational_path_integral(jumps.eta2 + 1j * c, 1j * b, t, alpha)
    return jumps.q * jumps.eta1 * up + (1 - jumps.q) * jumps.eta2 * down


def _quad_path_integral(jumps, c, b, t, alpha, tol, max_level):
    b = np.asarray(b, dtype=complex)
    flat = b.ravel()
    if flat.size == 0:
        return np.zeros(b.shape, dtype=complex)
    g_inf = np.full(flat.size, complex(jumps.cf(c)))

    def g(y, idx):
        return jumps.cf(c + flat[idx, None] * y[None, :])

    scale = float(np.max(np.abs(flat))) if flat.size else 1.0
    out = decay_integral(g, alpha, t, flat.size, scale, g_inf, tol, max_level)
    return out.reshape(b.shape)


def jump_path_integral(jumps: JumpSpec, c: complex, b, t: float, alpha: float,
                       tol: float = DEFAULT_TOL, max_level: int = DEFAULT_MAX_LEVEL):
    """int_0^t phi_xi(c + b*exp(-alpha*tau)) dtau for an array of b."""
    if jumps is None:
        raise InputError("jump integral requested for a model without jumps")
    if t <= 0:
        return np.zeros(np.shape(b), dtype=complex)
    if isinstance(jumps, DoubleExponentialJumps):
        return _kou_path_integral(jumps, c, np.asarray(b, dtype=complex), t, alpha)
    return _quad_path_integral(jumps, c, b, t, alpha, tol, max_level)


def integral_a1(u, v, t: float, p: ModelParams, tol: float = DEFAULT_TOL,
                max_level: int = DEFAULT_MAX_LEVEL):
    """A1(u, v, t) = int_{e^{-alpha t}}^1 y^{-1} phi_xi(u y) e^{-v y} dy for Gaussian jumps."""
    if not isinstance(p.jumps, GaussianJumps):
        raise InputError("A1 is defined for Gaussian jumps")
    if not t > 0:
        raise InputError(f"t must be positive, got {t}")
    u, v = np.broadcast_arrays(np.asarray(u, dtype=complex), np.asarray(v, dtype=complex))
    uf, vf = u.ravel(), v.ravel()
    cf = p.jumps.cf

    def g(y, idx):
        return cf(uf[idx, None] * y[None, :]) * np.exp(-vf[idx, None] * y[None, :])

    scale = float(np.max(np.abs(np.concatenate([uf, vf])))) if uf.size else 1.0
    res = p.alpha * decay_integral(g, p.alpha, t, uf.size, scale, np.ones(uf.size), tol, max_level)
    res = res.reshape(u.shape)
    return res if res.ndim else complex(res)


def integral_a23(u, theta: float, t: float, p: ModelParams, which: str = "A2",
                 diagnostics: dict | None = None, tol: float = DEFAULT_TOL):
    """A2 or A3 of the double-exponential model.

    A2(u, theta, t) = int_{e^{-alpha t}}^1 dy / (y (eta1 - theta - i u y)),
    A3(u, theta, t) = int_{e^{-alpha t}}^1 dy / (y (eta2 + theta + i u y)).

    The closed form is checked against the continuous argument of
    ``c + b*y`` sampled at 32 checkpoints; on a mismatch the value is recomputed
    by quadrature and ``diagnostics["branch_fallback"]`` is set.
    """
    if not isinstance(p.jumps, DoubleExponentialJumps):
        raise InputError("A2/A3 are defined for double-exponential jumps")
    if not t > 0:
        raise InputError(f"t must be positive, got {t}")
    u = np.asarray(u, dtype=complex)
    if which == "A2":
        c, b = p.jumps.eta1 - theta, -1j * u
    elif which == "A3":
        c, b = p.jumps.eta2 + theta, 1j * u
    else:
        raise InputError(f"which must be 'A2' or 'A3', got {which!r}")
    if c == 0:
        raise DomainError(f"{which} undefined: constant term of the denominator vanishes")
    c = complex(c)
    res = p.alpha * rational_path_integral(c, b, t, p.alpha)

    # branch-continuity monitor
    y = np.exp(-p.alpha * t * np.linspace(0.0, 1.0, 33))
    d = c + np.multiply.outer(b, y)
    cont = -np.sum(np.angle(d[..., 1:] / d[..., :-1]), axis=-1)
    principal = np.angle((c + b) / (c + b * np.exp(-p.alpha * t)))
    bad = np.abs(cont - principal) > 1e-6
    if np.any(bad):
        bf = np.atleast_1d(b)[np.atleast_1d(bad)]
        quad = p.alpha * integrate_batch(
            lambda tau, idx: 1.0 / (c + bf[idx, None] * np.exp(-p.alpha * tau)[None, :]),
            0.0, t, bf.size, tol,
        )
        res = np.atleast_1d(res).copy()
        res[np.atleast_1d(bad)] = quad
        res = res.reshape(u.shape)
    if diagnostics is not None:
        diagnostics["branch_fallback"] = bool(np.any(bad))
    return res if np.ndim(res) else complex(res)


def k_integrals(p: ModelParams, theta: float, grid, j: int, u, tol: float = DEFAULT_TOL):
    """(K1, K2) jump integrals of the j-th log-return.

    K1 = int_0^D phi_xi(-i theta + u e^{-alpha tau}) dtau,
    K2 = int_0^{jD} phi_xi(-i theta + u (e^{-alpha D} - 1) e^{-alpha tau}) dtau.
    """
    if p.jumps is None:
        raise InputError("K integrals need a jump law")
    check_theta(p, theta)
    delta = _delta_of(grid)
    u = np.asarray(u, dtype=complex)
    c = -1j * theta
    k1 = jump_path_integral(p.jumps, c, u, delta, p.alpha, tol)
    k2 = jump_path_integral(p.jumps, c, u * math.expm1(-p.alpha * delta), j * delta, p.alpha, tol)
    if u.ndim == 0:
        return complex(k1), complex(k2)
    return k1, k2


# --------------------------------------------------------------------------
# Characteristic functions
# --------------------------------------------------------------------------


def log_cf_logprice(p: ModelParams, theta: float, t: float, u, tol: float = DEFAULT_TOL):
    """Logarithm of the CF of Y_t under the Esscher measure with parameter theta."""
    if not t > 0:
        raise InputError(f"t must be positive, got {t}")
    check_theta(p, theta)
    u = np.asarray(u, dtype=complex)
    a = p.alpha
    s2 = p.sigma**2
    out = (1j * u * (p.mu + s2 * theta / a) * (-math.expm1(-a * t))
           - s2 * (-math.expm1(-2 * a * t)) / (4 * a) * u * u)
    if p.lam > 0:
        out = out + p.lam * (jump_path_integral(p.jumps, -1j * theta, u, t, a, tol) - jump_mgf(p, theta) * t)
    return out


def cf_logprice(p: ModelParams, theta: float, t: float, u, tol: float = DEFAULT_TOL):
    """phi^theta_{Y_t}(u) with Y_0 = 0."""
    out = np.exp(log_cf_logprice(p, theta, t, u, tol))
    out = np.where(np.asarray(u) == 0, 1.0 + 0j, out)
    return out if out.ndim else complex(out)


def log_cf_logreturn(p: ModelParams, theta: float, grid, j: int, u, tol: float = DEFAULT_TOL):
    """Logarithm of the CF of X_{jD} = Y_{(j+1)D} - Y_{jD}."""
    delta = _delta_of(grid)
    if j < 0:
        raise InputError(f"observation index must be >= 0, got {j}")
    check_theta(p, theta)
    u = np.asarray(u, dtype=complex)
    a = p.alpha
    s2 = p.sigma**2
    decay = math.exp(-a * j * delta) * (-math.expm1(-a * delta))
    out = 1j * u * (p.mu + s2 * theta / a) * decay - s2 * ejk(a, delta, j, 2) / (4 * a) * u * u
    if p.lam > 0:
        k1, k2 = k_integrals(p, theta, delta, j, u, tol)
        out = out + p.lam * (k1 + k2 - jump_mgf(p, theta) * (j + 1) * delta)
    return out


def cf_logreturn(p: ModelParams, theta: float, grid, j: int, u, tol: float = DEFAULT_TOL):
    """phi^theta_{X_{jD}}(u)."""
    out = np.exp(log_cf_logreturn(p, theta, grid, j, u, tol))
    out = np.where(np.asarray(u) == 0, 1.0 + 0j, out)
    return out if out.ndim else complex(out)


def _gauss_k2_table(jumps: GaussianJumps, theta, alpha, delta, jmax, b, tol):
    """Cumulative K2-type integrals at tau = 0, D, ..., jmax*D for every b.

    Starts with a 4-point rule per interval and refines (8 points, then
    halved sub-panels) until the last entry matches adaptive quadrature.
    """
    check = _quad_path_integral(jumps, -1j * theta, b, jmax * delta, alpha, tol, DEFAULT_MAX_LEVEL)
    sub = max(1, int(math.ceil(alpha * delta / 0.25)))
    plan = [(4, sub), (8, sub)] + [(8, sub * 2**k) for k in range(1, 7)]
    err = math.inf
    for order, s in plan:
        gl_x, gl_w = np.polynomial.legendre.leggauss(order)
        table = _kernels.gauss_jump_panels(b, -float(theta), jumps.mu, jumps.sigma, alpha, delta,
                                           int(jmax), s, gl_x, gl_w)
        err = float(np.max(np.abs(table[-1] - check))) if b.size else 0.0
        if err <= 10 * tol + 1e-13 * jmax * delta:
            return table
    raise NumericalError("panel integration of the jump CF did not reach tolerance", error_estimate=err)


def log_cf_logreturn_table(p: ModelParams, theta: float, grid, js, u, tol: float = DEFAULT_TOL):
    """log phi^theta_{X_{jD}}(u_k) for many observation indices at once.

    Returns an array of shape ``(len(js), len(u))``.
    """
    delta = _delta_of(grid)
    check_theta(p, theta)
    js = np.asarray(js, dtype=np.int64).ravel()
    if js.size and js.min() < 0:
        raise InputError("observation indices must be >= 0")
    u = np.asarray(u, dtype=complex).ravel()
    a = p.alpha
    s2 = p.sigma**2
    c = -math.expm1(-a * delta)
    decay = np.exp(-a * js * delta) * c
    out = (1j * np.multiply.outer(decay, u) * (p.mu + s2 * theta / a)
           - np.multiply.outer(ejk(a, delta, js, 2), s2 * u * u / (4 * a)))
    if p.lam > 0 and js.size:
        cc = -1j * theta
        k1 = jump_path_integral(p.jumps, cc, u, delta, a, tol)
        b = u * math.expm1(-a * delta)
        if isinstance(p.jumps, DoubleExponentialJumps):
            k2 = _kou_path_integral(p.jumps, cc, b[None, :], (js * delta)[:, None], a)
        else:
            table = _gauss_k2_table(p.jumps, theta, a, delta, int(js.max()), b, tol)
            k2 = table[js]
        m = jump_mgf(p, theta)
        out = out + p.lam * (k1[None, :] + k2 - m * ((js + 1) * delta)[:, None])
    return out


def cf_logreturn_table(p: ModelParams, theta: float, grid, js, u, tol: float = DEFAULT_TOL):
    """phi^theta_{X_{jD}}(u_k) for many j; shape ``(len(js), len(u))``."""
    out = np.exp(log_cf_logreturn_table(p, theta, grid, js, u, tol))
    u = np.asarray(u).ravel()
    out[:, u == 0] = 1.0
    return out
