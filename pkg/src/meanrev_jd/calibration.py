"""Shared calibration plumbing: result type, parameter packing, boxes."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .model import BOUNDS, MODELS, PARAM_NAMES, ModelParams, params_from_dict


@dataclass
class CalibrationResult:
    """Outcome of an estimator.

    Attributes:
        model: "bsch", "merton" or "kou".
        estimator: "mom", "mle" or "ecf".
        params: Fitted parameters.
        std_errors: Standard errors by parameter name, when available.
        objective: Final objective value (estimator specific).
        converged: Whether the optimizer reported success.
        diagnostics: Free-form details (gradient norm, iterations, flags).
    """

    model: str
    estimator: str
    params: ModelParams
    std_errors: dict | None
    objective: float
    converged: bool
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "estimator": self.estimator,
            "params": self.params.to_dict(),
            "std_errors": self.std_errors,
            "objective": self.objective,
            "converged": self.converged,
            "diagnostics": self.diagnostics,
        }


class ParamPacker:
    """Maps between ModelParams and the vector of free (non-fixed) parameters."""

    def __init__(self, model: str, init: ModelParams, fixed: dict | None = None):
        if model not in MODELS:
            raise InputError(f"unknown model {model!r}")
        if init.model != model:
            raise InputError(f"initial parameters are for {init.model!r}, not {model!r}")
        self.model = model
        self.names = PARAM_NAMES[model]
        fixed = dict(fixed or {})
        unknown = set(fixed) - set(self.names)
        if unknown:
            raise InputError(f"cannot fix unknown parameters {sorted(unknown)} for {model}")
        self.base = init.to_dict()
        self.base.update({k: float(v) for k, v in fixed.items()})
        self.fixed = fixed
        self.free = tuple(k for k in self.names if k not in fixed)
        lo = np.array([BOUNDS[k][0] for k in self.free])
        hi = np.array([BOUNDS[k][1] for k in self.free])
        self.bounds = (lo, hi)

    def x0(self) -> np.ndarray:
        x = np.array([self.base[k] for k in self.free])
        return np.clip(x, self.bounds[0], self.bounds[1])

    def params(self, x) -> ModelParams:
        d = dict(self.base)
        d.update(zip(self.free, np.asarray(x, dtype=float)))
        return params_from_dict(self.model, d)

    def project(self, x) -> np.ndarray:
        return np.clip(np.asarray(x, dtype=float), self.bounds[0], self.bounds[1])


def default_init(model: str, x=None) -> ModelParams:
    """Rough starting point from the data's scale."""
    from .data import LogReturnSeries

    if isinstance(x, LogReturnSeries):
        sd = float(np.std(x.values)) or 1e-3
        vol = sd / np.sqrt(x.delta)
    else:
        vol = 0.5
    d = {"alpha": 1.0, "mu": 0.0, "sigma": 0.8 * vol, "lam": 10.0,
         "mu_j": 0.0, "sigma_j": 0.05, "eta1": 20.0, "eta2": 20.0, "q": 0.5}
    return params_from_dict(model, d)


def numeric_hessian(f, x, steps) -> np.ndarray:
    """Central-difference Hessian of a scalar function."""
    x = np.asarray(x, dtype=float)
    k = x.size
    h = np.asarray(steps, dtype=float)
    H = np.empty((k, k))
    f0 = f(x)
    for a in range(k):
        ea = np.zeros(k)
        ea[a] = h[a]
        H[a, a] = (f(x + ea) - 2 * f0 + f(x - ea)) / h[a] ** 2
        for b in range(a + 1, k):
            eb = np.zeros(k)
            eb[b] = h[b]
            v = (f(x + ea + eb) - f(x + ea - eb) - f(x - ea + eb) + f(x - ea - eb)) / (4 * h[a] * h[b])
            H[a, b] = H[b, a] = v
    return H
