"""Empirical characteristic function and GMM on a frequency grid.

Estimating functions for observation j stack the real and imaginary parts of
h(u, X_{jD}) = e^{iuX_{jD}} - phi_{X_{jD}}(u) over the grid points u_1..u_L.
Their covariance at the model CF is

    Cov(cos aX, cos bX) = (Re phi(a+b) + Re phi(a-b))/2 - Re phi(a) Re phi(b)
    Cov(cos aX, sin bX) = (Im phi(a+b) - Im phi(a-b))/2 - Re phi(a) Im phi(b)
    Cov(sin aX, sin bX) = (Re phi(a-b) - Re phi(a+b))/2 - Im phi(a) Im phi(b)

The observations are not identically distributed, so the weight is built from
the average of these matrices over j.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from ._quad import integrate_batch
from .calibration import CalibrationResult, ParamPacker, default_init
from .data import LogReturnSeries
from .errors import GridError, InputError
from .model import ModelParams, SeriesGrid, _delta_of, cf_logreturn_table

DEFAULT_ETA_SCALE = 2.0
DEFAULT_L = 10
EIG_FLOOR = 1e-10
RIDGE = 1e-8
_ECF_BLOCK = 2_000_000
WEIGHTS = ("gaussian", "paper-literal")


@dataclass(frozen=True)
class FrequencyGrid:
    """Points u_k = -eta + delta*k, k = 1..L, with delta = 2 eta / L."""

    eta: float
    L: int = DEFAULT_L

    def __post_init__(self):
        if not (math.isfinite(self.eta) and self.eta > 0):
            raise InputError(f"eta must be positive, got {self.eta}")
        if int(self.L) != self.L or self.L < 2:
            raise InputError(f"L must be an integer >= 2, got {self.L}")

    @property
    def delta(self) -> float:
        return 2 * self.eta / self.L

    @property
    def points(self) -> np.ndarray:
        return -self.eta + self.delta * np.arange(1, self.L + 1)

    @classmethod
    def for_data(cls, x: LogReturnSeries, L: int = DEFAULT_L, scale: float = DEFAULT_ETA_SCALE) -> FrequencyGrid:
        """Grid reaching ``scale`` standard deviations of the data in frequency."""
        sd = float(np.std(x.values))
        if sd <= 0:
            raise InputError("data have zero variance; cannot scale the frequency grid")
        return cls(scale / sd, L)


@dataclass(frozen=True)
class OmegaMatrix:
    """Covariance of the stacked (Re, Im) estimating functions."""

    matrix: np.ndarray
    L: int

    @property
    def rr(self) -> np.ndarray:
        return self.matrix[: self.L, : self.L]

    @property
    def ri(self) -> np.ndarray:
        return self.matrix[: self.L, self.L:]

    @property
    def ir(self) -> np.ndarray:
        return self.matrix[self.L:, : self.L]

    @property
    def ii(self) -> np.ndarray:
        return self.matrix[self.L:, self.L:]

    @property
    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix).min())

    def clipped(self) -> np.ndarray:
        """Nearest PSD matrix by eigenvalue clipping at zero."""
        vals, vecs = np.linalg.eigh(self.matrix)
        return (vecs * np.maximum(vals, 0.0)) @ vecs.T


def _values(x) -> np.ndarray:
    return x.values if isinstance(x, LogReturnSeries) else np.atleast_1d(np.asarray(x, dtype=float))


def ecf(x, u):
    """(1/n) sum_j e^{i u X_j}, vectorized over u."""
    v = _values(x)
    if v.size == 0:
        raise InputError("empty series")
    uu = np.asarray(u, dtype=float)
    flat = uu.ravel()
    out = np.empty(flat.size, dtype=complex)
    step = max(1, _ECF_BLOCK // v.size)  # bound the phase matrix at about _ECF_BLOCK entries
    for s in range(0, flat.size, step):
        phase = np.multiply.outer(flat[s: s + step], v)
        out[s: s + step] = (np.cos(phase).sum(axis=1) + 1j * np.sin(phase).sum(axis=1)) / v.size
    out = out.reshape(uu.shape)
    return complex(out) if out.ndim == 0 else out


def _stack(z: np.ndarray) -> np.ndarray:
    return np.concatenate([z.real, z.imag], axis=-1)


def estimating_functions(x: LogReturnSeries, p: ModelParams, fg: FrequencyGrid, j: int) -> np.ndarray:
    """Stacked (Re h(u_k), Im h(u_k)) for the observation with index j."""
    hit = np.nonzero(x.j == j)[0]
    if hit.size == 0:
        raise InputError(f"no observation with index {j}")
    u = fg.points
    phi = cf_logreturn_table(p, 0.0, x.delta, np.array([j]), u)[0]
    return _stack(np.exp(1j * u * x.values[hit[0]]) - phi)


def estimating_matrix(x: LogReturnSeries, p: ModelParams, fg: FrequencyGrid) -> np.ndarray:
    """Estimating functions of all observations, shape (n, 2L)."""
    u = fg.points
    js, rows = np.unique(x.j, return_inverse=True)
    phi = cf_logreturn_table(p, 0.0, x.delta, js, u)
    return _stack(np.exp(1j * np.multiply.outer(x.values, u)) - phi[rows])


def _mean_cf(p: ModelParams, delta: float, j: np.ndarray, u: np.ndarray) -> np.ndarray:
    js, counts = np.unique(j, return_counts=True)
    phi = cf_logreturn_table(p, 0.0, delta, js, u)
    return counts @ phi / j.size


def averaged_estimating_functions(x: LogReturnSeries, p: ModelParams, fg: FrequencyGrid,
                                  ecf_values: np.ndarray | None = None) -> np.ndarray:
    """(1/n) sum_j f_j = stacked ecf(u) - (1/n) sum_j phi_{X_{jD}}(u)."""
    u = fg.points
    e = ecf(x, u) if ecf_values is None else ecf_values
    return _stack(e - _mean_cf(p, x.delta, x.j, u))


def _omega_from_table(phi_pt, phi_sum, phi_diff, weights) -> np.ndarray:
    """Weighted average over rows of the covariance blocks."""
    w = weights / weights.sum()
    R, I = phi_pt.real, phi_pt.imag
    rr = 0.5 * (np.tensordot(w, phi_sum.real + phi_diff.real, 1)) - (R.T * w) @ R
    ri = 0.5 * (np.tensordot(w, phi_sum.imag - phi_diff.imag, 1)) - (R.T * w) @ I
    ii = 0.5 * (np.tensordot(w, phi_diff.real - phi_sum.real, 1)) - (I.T * w) @ I
    top = np.hstack([rr, ri])
    bot = np.hstack([ri.T, ii])
    m = np.vstack([top, bot])
    return 0.5 * (m + m.T)


def _omega_rows(p: ModelParams, delta: float, js: np.ndarray, u: np.ndarray):
    L = u.size
    a, b = np.meshgrid(u, u, indexing="ij")
    grid_u = np.concatenate([u, (a + b).ravel(), (a - b).ravel()])
    table = cf_logreturn_table(p, 0.0, delta, js, grid_u)
    phi_pt = table[:, :L]
    phi_sum = table[:, L: L + L * L].reshape(-1, L, L)
    phi_diff = table[:, L + L * L:].reshape(-1, L, L)
    return phi_pt, phi_sum, phi_diff


def omega(p: ModelParams, grid, fg: FrequencyGrid, j: int) -> OmegaMatrix:
    """Exact covariance of the estimating functions of X_{jD}."""
    delta = _delta_of(grid)
    rows = _omega_rows(p, delta, np.array([j]), fg.points)
    return OmegaMatrix(_omega_from_table(*rows, np.ones(1)), fg.L)


def omega_bar(p: ModelParams, grid, fg: FrequencyGrid, j=None) -> OmegaMatrix:
    """Average of omega over the observation indices (1..n for a SeriesGrid)."""
    delta = _delta_of(grid)
    if j is None:
        if not isinstance(grid, SeriesGrid):
            raise InputError("pass observation indices or a SeriesGrid")
        j = grid.j
    js, counts = np.unique(np.asarray(j), return_counts=True)
    rows = _omega_rows(p, delta, js, fg.points)
    return OmegaMatrix(_omega_from_table(*rows, counts.astype(float)), fg.L)


def weight_factor(om: OmegaMatrix, literal: bool = False) -> tuple[np.ndarray, dict]:
    """Matrix A with A^T A equal to the GMM weight.

    The efficient weight is the inverse of the clipped Omega; a ridge of
    RIDGE * trace / 2L is added when the clipped matrix is singular. With
    ``literal`` the weight is Omega itself.
    """
    vals, vecs = np.linalg.eigh(om.matrix)
    info = {"min_eigenvalue": float(vals.min()), "clipped": bool(vals.min() < 0)}
    vals = np.maximum(vals, 0.0)
    if literal:
        return (vecs * np.sqrt(vals)).T, info
    top = vals.max() if vals.size else 0.0
    if top <= 0:
        raise InputError("weight matrix is zero; the data carry no information on this grid")
    if vals.min() < EIG_FLOOR * top:
        ridge = RIDGE * vals.sum() / vals.size
        vals = vals + ridge
        info["ridge"] = float(ridge)
    return (vecs / np.sqrt(vals)).T, info


def gmm_objective(x: LogReturnSeries, p: ModelParams, fg: FrequencyGrid, factor: np.ndarray | None = None) -> float:
    """f_bar^T W f_bar with W = factor^T factor (identity when None)."""
    f = averaged_estimating_functions(x, p, fg)
    r = f if factor is None else factor @ f
    return float(r @ r)


def gmm_fit(x: LogReturnSeries, model: str, fg: FrequencyGrid | None = None, init: ModelParams | None = None,
            fixed: dict | None = None, literal_weight: bool = False, max_nfev: int = 2000) -> CalibrationResult:
    """Two-step GMM on the ECF residuals.

    Step 1 uses the identity weight. Step 2 weights by the pseudo-inverse of
    the averaged Omega at the step-1 estimate and restarts from it. The
    J-statistic is n times the step-2 objective.
    """
    fg = fg or FrequencyGrid.for_data(x)
    init = init or default_init(model, x)
    packer = ParamPacker(model, init, fixed)
    if 2 * fg.L < len(packer.free):
        raise InputError(f"2L = {2 * fg.L} moment conditions cannot identify {len(packer.free)} parameters")
    u = fg.points
    e = ecf(x, u)

    def resid(z, factor):
        f = averaged_estimating_functions(x, packer.params(z), fg, e)
        return f if factor is None else factor @ f

    kw = dict(bounds=packer.bounds, method="trf", x_scale="jac", xtol=1e-15, ftol=1e-15, gtol=1e-15,
              max_nfev=max_nfev)
    s1 = least_squares(resid, packer.x0(), args=(None,), **kw)
    z1 = packer.project(s1.x)
    p1 = packer.params(z1)
    om = omega_bar(p1, x.delta, fg, x.j)
    factor, winfo = weight_factor(om, literal_weight)
    s2 = least_squares(resid, z1, args=(factor,), **kw)
    z2 = packer.project(s2.x)
    p2 = packer.params(z2)
    q2 = float(2 * s2.cost)
    grad = s2.jac.T @ s2.fun * 2
    dof = 2 * fg.L - len(packer.free)
    diag = {
        "step1": {"params": p1.to_dict(), "objective": float(2 * s1.cost), "nfev": int(s1.nfev)},
        "step1_objective_step2_weight": float(np.sum((factor @ averaged_estimating_functions(x, p1, fg, e)) ** 2)),
        "weight": winfo,
        "literal_weight": literal_weight,
        "grid": {"eta": fg.eta, "L": fg.L},
        "J": x.n * q2 if not literal_weight else None,
        "J_dof": dof,
        "gradient_norm": float(np.linalg.norm(grad)),
        "nfev": int(s2.nfev),
        "free": list(packer.free),
        "fixed": dict(packer.fixed),
    }
    return CalibrationResult(model, "ecf", p2, None, q2, bool(s2.status > 0), diag)


def continuum_objective(x: LogReturnSeries, p: ModelParams, weight: str = "gaussian", scale: float = 1.0,
                        u_max: float | None = None, tol: float = 1e-12, ecf_fn=None) -> float:
    """Integral of |ecf(u) - mean_j phi_{X_{jD}}(u)|^2 against a weight.

    Args:
        weight: "gaussian" for e^{-(u/scale)^2} on a symmetric domain, or
            "paper-literal" for e^{-u/scale} on [0, u_max].
        scale: Frequency unit of the weight.
        u_max: Domain truncation; chosen so 4 * weight (|f|^2 <= 4) falls below ``tol`` when None.
        ecf_fn: Replacement for the empirical CF (a callable of u), for checks.
    """
    if weight not in WEIGHTS:
        raise InputError(f"weight must be one of {WEIGHTS}, got {weight!r}")
    if not scale > 0:
        raise InputError(f"scale must be positive, got {scale}")
    if weight == "gaussian":
        def w(u):
            return np.exp(-(u / scale) ** 2)
        auto = scale * math.sqrt(math.log(4 / tol))
        factor = 2.0  # |f(-u)| = |f(u)|
    else:
        def w(u):
            return np.exp(-u / scale)
        auto = scale * math.log(4 / tol)
        factor = 1.0
    U = auto if u_max is None else float(u_max)
    if w(np.array(U)) * 4 > tol * (1 + 1e-9):
        raise GridError(f"weight {float(w(np.array(U))):.2e} at the domain edge {U:.4g} is not negligible",
                        suggestion={"u_max": auto})
    efn = ecf_fn or (lambda u: ecf(x, u))

    def f(nodes, idx):
        diff = efn(nodes) - _mean_cf(p, x.delta, x.j, nodes)
        return (np.abs(diff) ** 2 * w(nodes))[None, :]

    total = integrate_batch(f, 0.0, U, 1, tol * scale, min_level=3)[0].real
    return float(factor * total)
