# -*- coding: utf-8 -*-
"""
Forward Performance - Package Init
"""

from .errors import (
    ConcavityError,
    ConfigError,
    ForwardPerformanceError,
    InvalidModelError,
    NumericError,
    RangeError,
    RegimeError,
)
from .models import (
    AveragedCoefficients,
    DerivativeStack,
    DriftReport,
    ExpansionResult,
    PortfolioVector,
    PowerModelParams,
    Regime,
)
from .widder import DensityFamily, InitialUtility, WidderMeasure, h_eval, h_inverse, u_derivatives, u_eval
from .factors import (
    FastFactor,
    MarketModel,
    SlowFactor,
    averaged_coefficients,
    invariant_density,
    lambda_bar,
    phi,
    phi_prime,
)
from .expansion import ValueSurface, approx_value, v01_eval, v0_eval, v10_eval
from .power import exact_value, riccati_solve, error_study, fast_reparam_study, multiscale_study
from .portfolio import pi_approx, pi_approx_fast, pi_approx_slow, sigma_pinv
from .drift import generator_theta, simulate_paths, theta_scan
from .config import RunConfig, load_config
from .pipeline import run_subcommand

__all__ = [
    "ForwardPerformanceError",
    "InvalidModelError",
    "ConfigError",
    "RegimeError",
    "NumericError",
    "RangeError",
    "ConcavityError",
    "AveragedCoefficients",
    "DerivativeStack",
    "DriftReport",
    "ExpansionResult",
    "PortfolioVector",
    "PowerModelParams",
    "Regime",
    "WidderMeasure",
    "DensityFamily",
    "InitialUtility",
    "h_eval",
    "h_inverse",
    "u_eval",
    "u_derivatives",
    "SlowFactor",
    "FastFactor",
    "MarketModel",
    "invariant_density",
    "lambda_bar",
    "averaged_coefficients",
    "phi",
    "phi_prime",
    "ValueSurface",
    "v0_eval",
    "v10_eval",
    "v01_eval",
    "approx_value",
    "exact_value",
    "riccati_solve",
    "error_study",
    "fast_reparam_study",
    "multiscale_study",
    "sigma_pinv",
    "pi_approx",
    "pi_approx_slow",
    "pi_approx_fast",
    "generator_theta",
    "theta_scan",
    "simulate_paths",
    "RunConfig",
    "load_config",
    "run_subcommand",
]
