# -*- coding: utf-8 -*-
"""
Pydantic models for the forward performance library

Structured outputs of every computation live here: derivative stacks,
averaged coefficients, expansion results, portfolios, study tables and
drift reports. They serialize straight into CSV rows and JSON payloads.
"""

import math
from enum import Enum
from typing import List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class Regime(str, Enum):
    """Admissible parameter regimes of the power-utility Riccati system"""
    RISK_AVERSE = "risk-averse"        # gamma_ra > 1, q > 0: always admissible
    RISK_TOLERANT = "risk-tolerant"    # gamma_ra < 1 with a strong positive hedge drift
    TRIVIAL = "trivial"                # Lambda = 0


class Branch(str, Enum):
    """Which exact Riccati solution is used"""
    TRANSIENT = "transient"      # A1(0) = 0, converges to the attracting root
    STATIONARY = "stationary"    # A1 frozen at the root closest to zero


# ============ Surface Evaluation ============

class DerivativeStack(BaseModel):
    """
    A value and its x-derivatives up to fourth order.

    Orders that were not requested stay None.
    """
    model_config = ConfigDict(frozen=True)

    value: float
    d1: Optional[float] = None
    d2: Optional[float] = None
    d3: Optional[float] = None
    d4: Optional[float] = None

    @classmethod
    def from_sequence(cls, values, max_order: int = 4) -> "DerivativeStack":
        names = ("value", "d1", "d2", "d3", "d4")
        return cls(**{name: float(v) for name, v in zip(names[: max_order + 1], values)})

    def as_list(self) -> List[Optional[float]]:
        return [self.value, self.d1, self.d2, self.d3, self.d4]

    def risk_tolerance(self) -> float:
        """-V_x / V_xx"""
        return -self.d1 / self.d2


class AveragedCoefficients(BaseModel):
    """Quantities averaged against the invariant law of the fast factor at a given y1"""
    model_config = ConfigDict(frozen=True)

    lambda_bar: float = Field(ge=0.0, description="Root-mean-square Sharpe ratio")
    lambda_bar_prime: float = Field(description="d lambda_bar / d y1")
    c10: float = Field(description="Slow correction constant")
    c01: float = Field(description="Fast correction constant")


class ExpansionResult(BaseModel):
    """
    Three-term approximation of the value function.

    combined = v0 + sqrt(delta) v10 + sqrt(epsilon) v01, assembled once in
    `assemble` so the identity holds to the last bit.
    """
    model_config = ConfigDict(frozen=True)

    v0: float
    v10: float
    v01: float
    combined: float
    delta: float = Field(ge=0.0)
    epsilon: float = Field(ge=0.0)

    @classmethod
    def assemble(cls, v0: float, v10: float, v01: float,
                 delta: float, epsilon: float) -> "ExpansionResult":
        combined = v0 + math.sqrt(delta) * v10 + math.sqrt(epsilon) * v01
        return cls(v0=v0, v10=v10, v01=v01, combined=combined,
                   delta=delta, epsilon=epsilon)


class CoordinateChange(BaseModel):
    """Result of mapping a heat-space coordinate xi back to wealth x"""
    model_config = ConfigDict(frozen=True)

    xi: float
    x: float
    w0: float = Field(description="Leading-order surface at (t, x)")


class NaturalParametrizationReport(BaseModel):
    """Quadrature of the auxiliary correction solutions against the closed forms"""
    slow_quadrature: float
    slow_closed: float
    slow_discrepancy: float
    fast_quadrature: float
    fast_closed: float
    fast_discrepancy: float
    n_quad: int

    @property
    def discrepancy(self) -> float:
        return max(self.slow_discrepancy, self.fast_discrepancy)


# ============ Portfolio ============

class PortfolioVector(BaseModel):
    """
    Approximately optimal portfolio in currency amounts per asset.

    weights = myopic + slow_hedge + fast_hedge componentwise.
    """
    weights: List[float]
    myopic: List[float]
    slow_hedge: List[float]
    fast_hedge: List[float]

    @classmethod
    def assemble(cls, myopic: np.ndarray, slow_hedge: np.ndarray,
                 fast_hedge: np.ndarray) -> "PortfolioVector":
        weights = myopic + slow_hedge + fast_hedge
        return cls(weights=weights.tolist(), myopic=myopic.tolist(),
                   slow_hedge=slow_hedge.tolist(), fast_hedge=fast_hedge.tolist())

    @model_validator(mode="after")
    def _check_lengths(self) -> "PortfolioVector":
        n = len(self.weights)
        if not (len(self.myopic) == len(self.slow_hedge) == len(self.fast_hedge) == n):
            raise ValueError("portfolio components must have one entry per asset")
        return self

    def as_array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=float)

    def fractions(self, x: float) -> List[float]:
        """Per-asset fractions of wealth"""
        return [w / x for w in self.weights]


# ============ Power Benchmark ============

class PowerModelParams(BaseModel):
    """
    Power-utility benchmark with a CIR factor.

    lambda(y) = Lambda sqrt(y), dY = delta (m0 - Y) dt + sqrt(delta) beta sqrt(Y) dB,
    d<W, B> = rho dt.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    gamma_ra: float = Field(gt=0.0, description="Relative risk aversion, not 1")
    Lambda: List[float] = Field(min_length=1, description="Sharpe loading on sqrt(y)")
    m0: float = Field(gt=0.0, description="Mean-reversion level")
    beta: float = Field(gt=0.0, description="Volatility of the factor")
    rho: List[float] = Field(min_length=1, description="Asset-factor correlations")
    delta: float = Field(gt=0.0, description="Time scale of the factor")

    @field_validator("gamma_ra")
    @classmethod
    def _not_log_utility(cls, v: float) -> float:
        if v == 1.0:
            raise ValueError("gamma_ra = 1 (logarithmic utility) is excluded")
        return v

    @model_validator(mode="after")
    def _check_correlations(self) -> "PowerModelParams":
        if len(self.Lambda) != len(self.rho):
            raise ValueError("Lambda and rho must have the same length")
        rho_sq = float(np.dot(self.rho, self.rho))
        if self.gamma_ra > 1.0 and abs(rho_sq - self.gamma_ra / (self.gamma_ra - 1.0)) < 1e-12:
            raise ValueError("||rho||^2 = gamma/(gamma-1) is excluded: the distortion power q is infinite")
        if rho_sq > 1.0 + 1e-12:
            raise ValueError(f"||rho|| must not exceed 1, got {math.sqrt(rho_sq):.6f}")
        return self

    @property
    def Gamma(self) -> float:
        return (1.0 - self.gamma_ra) / self.gamma_ra

    @property
    def q(self) -> float:
        return 1.0 / (1.0 + self.Gamma * float(np.dot(self.rho, self.rho)))

    @property
    def lambda_sq(self) -> float:
        return float(np.dot(self.Lambda, self.Lambda))

    @property
    def lambda_rho(self) -> float:
        return float(np.dot(self.Lambda, self.rho))

    def with_delta(self, delta: float) -> "PowerModelParams":
        return self.model_copy(update={"delta": delta})

    def with_rho(self, rho: List[float]) -> "PowerModelParams":
        return PowerModelParams(**{**self.model_dump(), "rho": rho})


# ============ Studies ============

class StudyRow(BaseModel):
    """One grid point of a convergence study"""
    parameter: float
    exact: float
    one_term: float
    two_term: float
    error_one_term: float
    error_two_term: float
    retained: bool = True


class RateStudy(BaseModel):
    """Log-log slope fits of approximation errors"""
    kind: Literal["slow", "fast"]
    t: float
    x: float
    y: float
    rows: List[StudyRow]
    two_term_slope: Optional[float] = None
    one_term_slope: Optional[float] = None
    dropped: List[float] = Field(default_factory=list)
    lambda_bar_sq: Optional[float] = None


class MultiscaleRow(BaseModel):
    delta: float
    epsilon: float
    approx: float
    exact: Optional[float] = None
    error: Optional[float] = None
    ratio: Optional[float] = None


class MultiscaleStudy(BaseModel):
    """Rate table over (delta, epsilon); oracle is 'none' when no exact reference exists"""
    oracle: Literal["separable-exact", "none"]
    rows: List[MultiscaleRow]
    property_checks: dict = Field(default_factory=dict)

    @property
    def ratios(self) -> List[float]:
        return [r.ratio for r in self.rows if r.ratio is not None]


# ============ Drift Audit ============

class ThetaScanRow(BaseModel):
    delta: float
    epsilon: float
    sup_abs_theta: float
    ratio: Optional[float] = None
    theta: List[float]


class MartingaleStats(BaseModel):
    """Monte Carlo deviation of V along simulated paths"""
    mean_deviation: float
    standard_error: float
    n_paths: int
    n_excluded: int = 0
    dt: float
    horizon: float
    rng_seed: int
    antithetic: bool = False


class DriftReport(BaseModel):
    """Generator drift over a state grid and, optionally, path statistics"""
    grid: List[Tuple[float, float, float, float]] = Field(default_factory=list)
    rows: List[ThetaScanRow] = Field(default_factory=list)
    mc: Optional[MartingaleStats] = None

    @property
    def sup_abs_theta(self) -> float:
        return max((r.sup_abs_theta for r in self.rows), default=0.0)

    @property
    def ratios(self) -> List[float]:
        return [r.ratio for r in self.rows if r.ratio is not None]
