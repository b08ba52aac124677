"""Mean-reverting jump-diffusion models: characteristic functions, Esscher
pricing measure, calibration (moments, likelihood, ECF-GMM), Fourier option
pricing and a Monte-Carlo oracle.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .data import LogReturnSeries, PriceSeries, describe, ingest_csv, to_logreturns, write_price_csv
from .density import DensityConfig, bsch_score, density_eta, density_logreturn, loglik, mle_fit
from .ecf import FrequencyGrid, OmegaMatrix, continuum_objective, ecf, estimating_functions, gmm_fit, omega, omega_bar
from .errors import DomainError, GridError, InputError, MeanRevJDError, NoRootError, NumericalError
from .esscher import EsscherSolution, MarketParams, martingale_residual, solve_theta
from .model import (
    DoubleExponentialJumps,
    GaussianJumps,
    ModelParams,
    SeriesGrid,
    cf_logprice,
    cf_logreturn,
    cf_logreturn_table,
    params_from_dict,
)
from .moments import MomentSet, averaged_moment, empirical_moments, mom_fit, theoretical_moment
from .pricing import OptionSpec, PricingGrid, price_call_fft, price_call_quadrature
from .simulate import SimConfig, mc_price_call, simulate_logprices, simulate_logreturns

__all__ = [
    "DensityConfig", "DomainError", "DoubleExponentialJumps", "EsscherSolution", "FrequencyGrid",
    "GaussianJumps", "GridError", "InputError", "LogReturnSeries", "MarketParams", "MeanRevJDError",
    "ModelParams", "MomentSet", "NoRootError", "NumericalError", "OmegaMatrix", "OptionSpec", "PriceSeries",
    "PricingGrid", "SeriesGrid", "SimConfig", "averaged_moment", "bsch_score", "cf_logprice", "cf_logreturn",
    "cf_logreturn_table", "continuum_objective", "density_eta", "density_logreturn", "describe", "ecf",
    "empirical_moments", "estimating_functions", "gmm_fit", "ingest_csv", "loglik", "martingale_residual",
    "mc_price_call", "mle_fit", "mom_fit", "omega", "omega_bar", "params_from_dict", "price_call_fft",
    "price_call_quadrature", "simulate_logprices", "simulate_logreturns", "solve_theta", "theoretical_moment",
    "to_logreturns", "write_price_csv",
]
