# -*- coding: utf-8 -*-
"""
Named model presets

Each preset is a plain run-configuration dictionary validated through the same
RunConfig schema as a TOML file. Parameters sit inside the admissible Riccati
regimes and give clean convergence rates at the recorded study points.
"""

import copy
from typing import Dict, List


PRESETS: Dict[str, dict] = {
    # slow-only power benchmark
    "cir-power": {
        "schema_version": 1,
        "model": {
            "gamma_ra": 2.0,
            "sharpe": {"family": "sqrt", "lambda_s": [1.0], "lambda_f": [0.0]},
            "rho_s": [0.05],
            "rho_f": [0.0],
            "slow": {"kind": "cir", "mean": 1.0, "vol": 1.0},
            "fast": {"kind": "frozen", "value": 1.0},
            "benchmark": "slow",
        },
        "grid": {
            "t": [0.1, 0.5, 1.0],
            "x": [0.5, 1.0, 2.0],
            "y1": [0.5, 1.0, 1.5],
            "y2": [1.0],
            "delta": [1e-4, 1e-3, 1e-2, 1e-1],
            "epsilon": [1e-4],
        },
        "study": {"t": 0.1, "x": 1.0, "y1": 1.0, "y2": 1.0},
        "simulation": {"x0": 1.0, "y10": 1.0, "y20": 1.0, "horizon": 0.5, "dt": 2e-3,
                       "n_paths": 20000, "delta": 0.01},
    },
    # fast-only benchmark, exact solution reparametrized with delta = 1/epsilon
    "cir-fast": {
        "schema_version": 1,
        "model": {
            "gamma_ra": 2.0,
            "sharpe": {"family": "sqrt", "lambda_s": [0.0], "lambda_f": [1.0]},
            "rho_s": [0.0],
            "rho_f": [0.05],
            "slow": {"kind": "frozen", "value": 1.0},
            "fast": {"kind": "cir", "mean": 1.0, "vol": 1.0},
            "benchmark": "fast",
        },
        "grid": {
            "t": [0.1, 0.5],
            "x": [0.5, 1.0, 2.0],
            "y1": [1.0],
            "y2": [0.5, 1.0, 1.5],
            "delta": [1e-4],
            "epsilon": [1e-4, 1e-3, 1e-2, 1e-1],
        },
        "study": {"t": 0.1, "x": 1.0, "y1": 1.0, "y2": 1.0},
        "simulation": {"x0": 1.0, "y10": 1.0, "y20": 1.0, "horizon": 0.1, "dt": 1e-4,
                       "n_paths": 4096, "epsilon": 0.01},
    },
    # two assets, one loading on each factor: exact separable reference
    "cir-multiscale": {
        "schema_version": 1,
        "model": {
            "gamma_ra": 2.0,
            "sharpe": {"family": "sqrt", "lambda_s": [1.0, 0.0], "lambda_f": [0.0, 1.0]},
            "rho_s": [0.5, 0.0],
            "rho_f": [0.0, 0.5],
            "slow": {"kind": "cir", "mean": 1.0, "vol": 1.0},
            "fast": {"kind": "cir", "mean": 1.0, "vol": 1.0},
            "benchmark": "separable",
        },
        "grid": {
            "t": [0.5, 1.0],
            "x": [1.0, 2.0],
            "y1": [0.5, 1.0],
            "y2": [0.5, 1.0],
            "delta": [1e-4, 1e-3, 1e-2],
            "epsilon": [1e-4, 1e-3, 1e-2],
        },
        "study": {"t": 1.0, "x": 1.0, "y1": 1.0, "y2": 1.0},
        "simulation": {"x0": 1.0, "y10": 1.0, "y20": 1.0, "horizon": 0.1, "dt": 1e-4,
                       "n_paths": 4096, "delta": 0.01, "epsilon": 0.01},
    },
    # OU fast factor with an affine Sharpe ratio; no exact reference
    "ou-linear": {
        "schema_version": 1,
        "model": {
            "gamma_ra": 2.0,
            "sharpe": {"family": "affine", "base": [0.2], "lambda_s": [0.1], "lambda_f": [0.3]},
            "rho_s": [0.2],
            "rho_f": [0.3],
            "rho_sf": 0.1,
            "slow": {"kind": "ou", "mean": 0.5, "vol": 0.4},
            "fast": {"kind": "ou", "mean": 0.0, "vol": 0.5},
        },
        "grid": {
            "t": [0.5, 1.0],
            "x": [0.5, 1.0, 2.0],
            "y1": [0.0, 0.5, 1.0],
            "y2": [-0.5, 0.0, 0.5],
            "delta": [1e-3, 1e-2],
            "epsilon": [1e-3, 1e-2],
        },
        "study": {"t": 0.5, "x": 1.0, "y1": 0.5, "y2": 0.0},
        "simulation": {"x0": 1.0, "y10": 0.5, "y20": 0.0, "horizon": 0.002, "dt": 1e-4,
                       "n_paths": 32, "delta": 0.01, "epsilon": 0.01, "feedback": "approx"},
    },
}


def preset_names() -> List[str]:
    return sorted(PRESETS)


def get_preset(name: str) -> dict:
    """Deep copy of a preset dictionary, so callers may modify it"""
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose one of {', '.join(preset_names())}")
    return copy.deepcopy(PRESETS[name])
