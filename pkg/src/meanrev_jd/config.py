"""Numerical settings with file and command-line overrides.

The config file is INI-style ``key = value`` text. Tolerances live in the
``[numerics]`` section; any other section is ignored. The path comes from
``--config`` or the ``MEANREV_JD_CONFIG`` environment variable. Precedence is
command-line flag > config file > the defaults below.
"""

from __future__ import annotations

import configparser
import os
from pathlib import Path

from . import esscher, pricing
from ._quad import DEFAULT_TOL
from .density import TAIL_TOL
from .ecf import DEFAULT_ETA_SCALE, DEFAULT_L
from .errors import InputError

ENV_VAR = "MEANREV_JD_CONFIG"

NUMERICS_DEFAULTS: dict[str, float | int] = {
    "cf_tol": DEFAULT_TOL,
    "theta_xtol": esscher.THETA_XTOL,
    "residual_tol": esscher.RESIDUAL_TOL,
    "damping": pricing.DEFAULT_R,
    "quad_tol": 1e-12,
    "quad_tail_tol": 1e-10,
    "fft_n": 4096,
    "fft_m": 400.0,
    "fft_agreement": pricing.FFT_AGREEMENT,
    "density_tail_tol": TAIL_TOL,
    "density_nodes": 256,
    "gmm_l": DEFAULT_L,
    "gmm_eta_scale": DEFAULT_ETA_SCALE,
    "mc_paths": 100_000,
    "mc_chunk": 500_000,
    "delta": 1.0 / 252,
}

_INT_KEYS = {"fft_n", "density_nodes", "gmm_l", "mc_paths", "mc_chunk"}


def _coerce(key: str, raw) -> float | int:
    try:
        v = float(raw)
    except (TypeError, ValueError):
        raise InputError(f"config value for {key!r} is not a number: {raw!r}") from None
    if key in _INT_KEYS:
        if not v.is_integer():
            raise InputError(f"config value for {key!r} must be an integer: {raw!r}")
        return int(v)
    return v


def load_numerics(path=None, overrides: dict | None = None) -> dict:
    """Resolve numerical settings.

    Args:
        path: Config file; falls back to $MEANREV_JD_CONFIG when None.
        overrides: Values from the command line (None entries are ignored).
    """
    out = dict(NUMERICS_DEFAULTS)
    src = path or os.environ.get(ENV_VAR)
    if src:
        p = Path(src)
        if not p.exists():
            raise InputError(f"config file not found: {p}")
        parser = configparser.ConfigParser()
        try:
            parser.read(p)
        except configparser.Error as exc:
            raise InputError(f"cannot parse config file {p}: {exc}") from None
        if parser.has_section("numerics"):
            for key, raw in parser.items("numerics"):
                if key not in NUMERICS_DEFAULTS:
                    raise InputError(f"unknown numerics key {key!r} in {p}")
                out[key] = _coerce(key, raw)
    for key, val in (overrides or {}).items():
        if val is not None:
            if key not in NUMERICS_DEFAULTS:
                raise InputError(f"unknown numerics key {key!r}")
            out[key] = _coerce(key, val)
    return out
