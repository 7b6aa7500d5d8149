# -*- coding: utf-8 -*-
"""
Run configuration

A run is described by a TOML document (or a named preset) validated into
RunConfig. Unknown keys are errors. Process-level defaults come from the
environment (.env supported): FPP_OUT_DIR, FPP_THREADS, FPP_LOG_LEVEL.
"""

import hashlib
import json
import logging
import math
import os

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass
from itertools import product
from pathlib import Path
from typing import List, Literal, Optional, Tuple, Union

import numpy as np
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigError, InvalidModelError
from .factors import FastFactor, MarketModel, SlowFactor, affine_sharpe, sqrt_sharpe
from .models import PowerModelParams
from .presets import get_preset
from .widder import QUAD_TOL, DensityFamily, InitialUtility, WidderMeasure, h_range

logger = logging.getLogger(__name__)


SCHEMA_VERSION = 1


# ============ Environment ============

@dataclass(frozen=True)
class Settings:
    out_dir: Path
    threads: int
    log_level: str

    @classmethod
    def from_env(cls) -> "Settings":
        load_dotenv()
        try:
            threads = int(os.getenv("FPP_THREADS", "1"))
        except ValueError as exc:
            raise ConfigError(f"FPP_THREADS must be an integer: {exc}") from exc
        return cls(
            out_dir=Path(os.getenv("FPP_OUT_DIR", "results")),
            threads=max(threads, 1),
            log_level=os.getenv("FPP_LOG_LEVEL", "INFO").upper(),
        )


# ============ Schema ============

class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class FactorSpec(_Strict):
    """One factor: CIR or OU dynamics, or frozen at a value"""
    kind: Literal["cir", "ou", "frozen"]
    mean: float = 1.0
    vol: float = Field(default=1.0, gt=0.0)
    rate: float = Field(default=1.0, gt=0.0)
    value: Optional[float] = None

    @model_validator(mode="after")
    def _frozen_needs_value(self) -> "FactorSpec":
        if self.kind == "frozen" and self.value is None:
            raise ValueError("a frozen factor needs a value")
        if self.kind == "cir" and self.mean <= 0.0:
            raise ValueError("a CIR factor needs a positive mean")
        return self


class SharpeSpec(_Strict):
    family: Literal["sqrt", "affine"]
    lambda_s: List[float]
    lambda_f: List[float]
    base: Optional[List[float]] = None

    @model_validator(mode="after")
    def _lengths(self) -> "SharpeSpec":
        if len(self.lambda_s) != len(self.lambda_f):
            raise ValueError("lambda_s and lambda_f must have the same length")
        if self.family == "affine":
            if self.base is None:
                raise ValueError("the affine family needs a base vector")
            if len(self.base) != len(self.lambda_s):
                raise ValueError("base must have the same length as lambda_s")
        return self


class DensitySpec(_Strict):
    family: Literal["uniform", "triangular"]
    support: Tuple[float, float]
    mass: float = Field(default=1.0, gt=0.0)

    @field_validator("support")
    @classmethod
    def _finite_interval(cls, v: Tuple[float, float]) -> Tuple[float, float]:
        lo, hi = v
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise ValueError("density support must be a finite interval lo < hi")
        return v


class WidderSpec(_Strict):
    """Widder measure: atoms as (location, weight) pairs, an optional density and the constant c0"""
    atoms: List[Tuple[float, float]] = []
    density: Optional[DensitySpec] = None
    c0: Optional[float] = None

    @model_validator(mode="after")
    def _nonzero(self) -> "WidderSpec":
        if not self.atoms and self.density is None:
            raise ValueError("a Widder measure needs atoms or a density")
        if any(not w > 0.0 for _, w in self.atoms):
            raise ValueError("atom weights must be positive")
        if len({z for z, _ in self.atoms}) != len(self.atoms):
            raise ValueError("atom locations must be distinct")
        return self

    def to_measure(self) -> WidderMeasure:
        density = None
        if self.density is not None:
            lo, hi = self.density.support
            density = DensityFamily(self.density.family, lo, hi, self.density.mass)
        return WidderMeasure(atoms=tuple(self.atoms), density=density,
                             support=density.support if density else None, c0=self.c0)

    @classmethod
    def from_measure(cls, m: WidderMeasure) -> "WidderSpec":
        density = None
        if m.density is not None:
            if not isinstance(m.density, DensityFamily):
                raise InvalidModelError("only parametric densities can be written to a config")
            density = DensitySpec(family=m.density.family, support=m.density.support, mass=m.density.mass)
        return cls(atoms=list(m.atoms), density=density, c0=m.c0)


class DatumSpec(_Strict):
    """V(0, x): the power datum of gamma_ra, or the datum generated by the Widder measure"""
    kind: Literal["power", "widder"] = "power"
    x_ref: float = 1.0
    v_ref: float = 0.0


class ModelSpec(_Strict):
    gamma_ra: float = Field(gt=0.0, description="Relative risk aversion of the power datum")
    sharpe: SharpeSpec
    sigma: Optional[List[List[float]]] = Field(default=None, description="d x n volatility; identity if omitted")
    rho_s: List[float]
    rho_f: List[float]
    rho_sf: float = Field(default=0.0, ge=-1.0, le=1.0)
    slow: FactorSpec
    fast: FactorSpec
    benchmark: Optional[Literal["slow", "fast", "separable"]] = None
    widder: Optional[WidderSpec] = Field(default=None, description="Power measure of gamma_ra if omitted")
    datum: DatumSpec = DatumSpec()

    @field_validator("gamma_ra")
    @classmethod
    def _not_log_utility(cls, v: float) -> float:
        if v == 1.0:
            raise ValueError("gamma_ra = 1 (logarithmic utility) is excluded")
        return v

    @model_validator(mode="after")
    def _dimensions(self) -> "ModelSpec":
        d = len(self.sharpe.lambda_s)
        if len(self.rho_s) != d or len(self.rho_f) != d:
            raise ValueError(f"rho_s and rho_f must have length d={d}")
        if self.sigma is not None and len(self.sigma) != d:
            raise ValueError(f"sigma must have d={d} rows")
        return self

    @property
    def d(self) -> int:
        return len(self.sharpe.lambda_s)


def _strictly_increasing(values: List[float], name: str) -> List[float]:
    if not values:
        raise ValueError(f"grid {name} must be nonempty")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ValueError(f"grid {name} must be strictly increasing")
    return values


class GridSpec(_Strict):
    t: List[float] = [1.0]
    x: List[float] = [1.0]
    y1: List[float] = [1.0]
    y2: List[float] = [1.0]
    delta: List[float] = [1e-3, 1e-2]
    epsilon: List[float] = [1e-3, 1e-2]

    @model_validator(mode="after")
    def _check(self) -> "GridSpec":
        for name in ("t", "x", "y1", "y2", "delta", "epsilon"):
            _strictly_increasing(getattr(self, name), name)
        if min(self.t) < 0.0:
            raise ValueError("grid t must be non-negative")
        if min(self.x) <= 0.0:
            raise ValueError("grid x must be positive")
        if min(self.delta) <= 0.0 or min(self.epsilon) <= 0.0:
            raise ValueError("delta and epsilon grids must be positive")
        return self


class ToleranceSpec(_Strict):
    quad: float = Field(default=QUAD_TOL, gt=0.0)
    fd_step: float = Field(default=1e-3, gt=0.0)


class StudySpec(_Strict):
    t: float = Field(default=1.0, ge=0.0)
    x: float = Field(default=1.0, gt=0.0)
    y1: float = 1.0
    y2: float = 1.0


class SimulationSpec(_Strict):
    x0: float = Field(default=1.0, gt=0.0)
    y10: float = 1.0
    y20: float = 1.0
    horizon: float = Field(default=0.5, gt=0.0)
    dt: float = Field(default=1e-3, gt=0.0)
    n_paths: int = Field(default=10_000, ge=2)
    delta: float = Field(default=0.0, ge=0.0)
    epsilon: float = Field(default=0.0, ge=0.0)
    antithetic: bool = False
    keep_paths: bool = False
    feedback: Literal["exact", "approx", "zero"] = "exact"


class DriftSpec(_Strict):
    feedback: Literal["exact", "approx", "zero"] = "approx"


class RunConfig(_Strict):
    schema_version: Literal[1]
    model: ModelSpec
    grid: GridSpec = GridSpec()
    tolerances: ToleranceSpec = ToleranceSpec()
    study: StudySpec = StudySpec()
    simulation: SimulationSpec = SimulationSpec()
    drift: DriftSpec = DriftSpec()
    out_dir: Optional[str] = None
    seed: int = Field(default=0, ge=0)
    threads: Optional[int] = Field(default=None, ge=1)
    preset: Optional[str] = None

    def scale_pairs(self) -> List[Tuple[float, float]]:
        """(delta, epsilon) pairs; the scale of a frozen factor is pinned to zero"""
        deltas = [0.0] if self.model.slow.kind == "frozen" else self.grid.delta
        epsilons = [0.0] if self.model.fast.kind == "frozen" else self.grid.epsilon
        return list(product(deltas, epsilons))

    def states(self) -> List[Tuple[float, float, float, float]]:
        return list(product(self.grid.t, self.grid.x, self.grid.y1, self.grid.y2))


# ============ Loading ============

def _validate(data: dict, source: str) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        problems = "; ".join(f"{'.'.join(map(str, e['loc']))}: {e['msg']}" for e in exc.errors())
        raise ConfigError(f"{source}: {problems}") from exc


def _merge(base: dict, overrides: dict) -> dict:
    out = dict(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def load_config(path: Optional[Union[str, Path]] = None, preset: Optional[str] = None,
                overrides: Optional[dict] = None, check: bool = True) -> RunConfig:
    """
    Parse and validate a run configuration.

    A TOML file may name a preset under `preset`; its own keys then override
    the preset's. Model invariants are checked unless `check` is False.
    """
    if path is None and preset is None:
        raise ConfigError("either a config file or a preset name is required")

    data: dict = {}
    source = "preset" if path is None else str(path)
    if path is not None:
        try:
            with open(path, "rb") as handle:
                data = tomllib.load(handle)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: TOML parse error: {exc}") from exc
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc

    preset = preset or data.get("preset")
    if preset is not None:
        try:
            base = get_preset(preset)
        except KeyError as exc:
            raise ConfigError(str(exc.args[0])) from exc
        data = _merge(base, {**data, "preset": preset})
    if overrides:
        data = _merge(data, overrides)

    cfg = _validate(data, source)
    if check:
        benchmark_params(cfg)
        build_market_model(cfg).check_invariants()
    logger.debug("loaded config %s (hash %s)", source, config_hash(cfg)[:12])
    return cfg


def config_from_dict(data: dict, check: bool = True) -> RunConfig:
    """Validate an inline configuration; a `preset` key pulls in the preset as the base"""
    if data.get("preset"):
        return load_config(preset=data["preset"], overrides={k: v for k, v in data.items() if k != "preset"},
                           check=check)
    cfg = _validate(data, "inline config")
    if check:
        benchmark_params(cfg)
        build_market_model(cfg).check_invariants()
    return cfg


def config_hash(cfg: RunConfig) -> str:
    """SHA-256 of the canonical JSON dump"""
    canonical = json.dumps(cfg.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


# ============ Model Building ============

def _slow_factor(spec: FactorSpec) -> SlowFactor:
    if spec.kind == "frozen":
        return SlowFactor.frozen(spec.value)
    if spec.kind == "cir":
        return SlowFactor.cir(spec.mean, spec.vol, spec.rate)
    return SlowFactor.ou(spec.mean, spec.vol, spec.rate)


def _fast_factor(spec: FactorSpec) -> FastFactor:
    if spec.kind == "frozen":
        return FastFactor.frozen(spec.value)
    if spec.kind == "cir":
        return FastFactor.cir(spec.mean, spec.vol, spec.rate)
    return FastFactor.ou(spec.mean, spec.vol, spec.rate)


def _datum(spec: ModelSpec, widder: WidderMeasure) -> InitialUtility:
    if spec.datum.kind == "power":
        return InitialUtility.power(spec.gamma_ra)
    lower, _ = h_range(widder)
    domain_lower = lower if math.isfinite(lower) else 0.0
    if not spec.datum.x_ref > domain_lower:
        raise InvalidModelError(f"datum x_ref={spec.datum.x_ref} must exceed the domain bound {domain_lower:.6g}")
    return InitialUtility.from_widder(widder, spec.datum.x_ref, spec.datum.v_ref, domain_lower)


def build_market_model(cfg: RunConfig) -> MarketModel:
    spec = cfg.model
    if spec.sharpe.family == "sqrt":
        sharpe, dsharpe = sqrt_sharpe(spec.sharpe.lambda_s, spec.sharpe.lambda_f)
    else:
        sharpe, dsharpe = affine_sharpe(spec.sharpe.base, spec.sharpe.lambda_s, spec.sharpe.lambda_f)
    sigma = np.eye(spec.d) if spec.sigma is None else np.asarray(spec.sigma, dtype=float)
    widder = WidderMeasure.power(spec.gamma_ra) if spec.widder is None else spec.widder.to_measure()
    return MarketModel(
        lambda_fn=sharpe, dlambda_dy1=dsharpe, sigma_fn=lambda y1, y2: sigma,
        rho_s=spec.rho_s, rho_f=spec.rho_f, rho_sf=spec.rho_sf,
        slow=_slow_factor(spec.slow), fast=_fast_factor(spec.fast),
        widder=widder, v0=_datum(spec, widder),
        name=cfg.preset or "custom", metadata={"benchmark": spec.benchmark},
    )


def _power_params(spec: ModelSpec, factor: FactorSpec, lam: List[float], rho: List[float],
                  delta: float = 1.0) -> PowerModelParams:
    if factor.kind != "cir" or factor.rate != 1.0:
        raise InvalidModelError("power benchmarks need a CIR factor with unit mean-reversion rate")
    try:
        return PowerModelParams(gamma_ra=spec.gamma_ra, Lambda=lam, m0=factor.mean, beta=factor.vol,
                                rho=rho, delta=delta)
    except ValidationError as exc:
        raise InvalidModelError(f"benchmark parameters rejected: {exc.errors()[0]['msg']}") from exc


def benchmark_params(cfg: RunConfig) -> Tuple[Optional[PowerModelParams], Optional[PowerModelParams]]:
    """(slow, fast) power parameters of the configured benchmark; None where absent"""
    spec = cfg.model
    if spec.benchmark is None:
        return None, None
    if spec.widder is not None or spec.datum.kind != "power":
        raise InvalidModelError("power benchmarks need the power measure and datum of gamma_ra")
    if spec.sharpe.family != "sqrt" or spec.sigma is not None and not np.allclose(spec.sigma, np.eye(spec.d)):
        raise InvalidModelError("power benchmarks need the sqrt Sharpe family and identity volatility")
    if spec.benchmark == "slow":
        if any(spec.sharpe.lambda_f) or spec.fast.kind != "frozen":
            raise InvalidModelError("the slow benchmark needs a frozen fast factor and no fast loading")
        return _power_params(spec, spec.slow, spec.sharpe.lambda_s, spec.rho_s), None
    if spec.benchmark == "fast":
        if any(spec.sharpe.lambda_s) or spec.slow.kind != "frozen":
            raise InvalidModelError("the fast benchmark needs a frozen slow factor and no slow loading")
        return None, _power_params(spec, spec.fast, spec.sharpe.lambda_f, spec.rho_f)

    ls, lf = spec.sharpe.lambda_s, spec.sharpe.lambda_f
    separable = (spec.d == 2 and ls[1] == 0.0 and lf[0] == 0.0 and spec.rho_s[1] == 0.0
                 and spec.rho_f[0] == 0.0 and spec.rho_sf == 0.0)
    if not separable:
        raise InvalidModelError("the separable benchmark loads asset 1 on the slow factor and asset 2 on the fast one")
    return (_power_params(spec, spec.slow, [ls[0]], [spec.rho_s[0]]),
            _power_params(spec, spec.fast, [lf[1]], [spec.rho_f[1]]))


def resolve_threads(cfg: RunConfig, settings: Settings, flag: Optional[int] = None) -> int:
    """Flag over config over environment"""
    for value in (flag, cfg.threads):
        if value is not None:
            return max(int(value), 1)
    return settings.threads


def resolve_out_dir(cfg: RunConfig, settings: Settings, flag: Optional[str] = None) -> Path:
    for value in (flag, cfg.out_dir):
        if value:
            return Path(value)
    return settings.out_dir


def finite_or_none(value: Optional[float]) -> Optional[float]:
    return value if value is not None and math.isfinite(value) else None
