# -*- coding: utf-8 -*-
"""
Market and factor models, and the averages taken against the fast factor

The fast factor's invariant law mu has density m(y) proportional to
exp(int 2 gamma / alpha^2) / alpha^2. Everything the expansion consumes from
the fast scale is an average against mu:

    lambda_bar^2(y1) = E_mu ||lambda(y1, .)||^2
    C10(y1)          = rho_s . E_mu lambda(y1, .) kappa(y1)
    C01(y1)          = rho_f . E_mu [lambda(y1, .) phi'(y1, .) alpha(.)]

where phi solves the Poisson equation L phi = -(||lambda||^2 - lambda_bar^2).

Coefficient handles (b, kappa, gamma, alpha, lambda, sigma) must accept
numpy arrays and broadcast; lambda returns an array whose last axis is d.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq

from .errors import InvalidModelError, NumericError, RangeError
from .models import AveragedCoefficients
from .widder import InitialUtility, WidderMeasure, central_difference, datum_consistency

logger = logging.getLogger(__name__)


# ============ Numerical Constants ============

DENSITY_CUTOFF = 1e-12                   # truncate where m < cutoff * peak
LOG_CUTOFF = -math.log(DENSITY_CUTOFF)
MASS_TOL = 1e-8
CENTERING_TOL = 1e-8
SOURCE_ZERO_TOL = 1e-14                  # below this the Poisson source is identically zero
NODES_PER_PANEL = 20
INITIAL_PANELS = 16
MAX_REFINEMENTS = 4
MAX_SCAN_DOUBLINGS = 60
ODE_RTOL = 1e-12
ODE_ATOL = 1e-14
LAMBDA_FD_STEP = 1e-4


# ============ Factor Dynamics ============

@dataclass(frozen=True, eq=False)
class SlowFactor:
    """dY1 = delta b(Y1) dt + sqrt(delta) kappa(Y1) dB1"""
    b: Callable
    kappa: Callable
    lower: float = -math.inf
    upper: float = math.inf
    frozen_at: Optional[float] = None

    @classmethod
    def cir(cls, mean: float, vol: float, rate: float = 1.0) -> "SlowFactor":
        return cls(b=lambda y: rate * (mean - y),
                   kappa=lambda y: vol * np.sqrt(np.maximum(y, 0.0)),
                   lower=0.0)

    @classmethod
    def ou(cls, mean: float, vol: float, rate: float = 1.0) -> "SlowFactor":
        return cls(b=lambda y: rate * (mean - y), kappa=lambda y: vol + 0.0 * y)

    @classmethod
    def frozen(cls, value: float) -> "SlowFactor":
        return cls(b=lambda y: 0.0 * y, kappa=lambda y: 0.0 * y, frozen_at=value)

    @property
    def is_frozen(self) -> bool:
        return self.frozen_at is not None

    def check(self, samples: Sequence[float]) -> None:
        if self.is_frozen:
            return
        kappa = np.asarray(self.kappa(np.asarray(samples, dtype=float)))
        if np.any(kappa <= 0.0):
            raise InvalidModelError("slow factor volatility kappa must be strictly positive on sampled states")


@dataclass(frozen=True, eq=False)
class FastFactor:
    """
    dY2 = gamma(Y2) / epsilon dt + alpha(Y2) / sqrt(epsilon) dB2

    `center` is an interior point where the invariant-law scan starts and
    `scale` the initial scan step; both only affect how truncation bounds are
    found, not the law itself.
    """
    gamma: Callable
    alpha: Callable
    lower: float = -math.inf
    upper: float = math.inf
    center: float = 0.0
    scale: float = 1.0
    frozen_at: Optional[float] = None

    @classmethod
    def cir(cls, mean: float, vol: float, rate: float = 1.0) -> "FastFactor":
        return cls(gamma=lambda y: rate * (mean - y),
                   alpha=lambda y: vol * np.sqrt(np.maximum(y, 0.0)),
                   lower=0.0, center=mean, scale=max(mean, vol * vol) / 2.0)

    @classmethod
    def ou(cls, mean: float, vol: float, rate: float = 1.0) -> "FastFactor":
        return cls(gamma=lambda y: rate * (mean - y), alpha=lambda y: vol + 0.0 * y,
                   center=mean, scale=vol / math.sqrt(2.0 * rate))

    @classmethod
    def frozen(cls, value: float) -> "FastFactor":
        return cls(gamma=lambda y: 0.0 * y, alpha=lambda y: 0.0 * y,
                   center=value, frozen_at=value)

    @property
    def is_frozen(self) -> bool:
        return self.frozen_at is not None

    def rescaled(self, factor: float) -> "FastFactor":
        """Same invariant law, dynamics sped up by `factor`"""
        root = math.sqrt(factor)
        return FastFactor(gamma=lambda y: factor * self.gamma(y), alpha=lambda y: root * self.alpha(y),
                          lower=self.lower, upper=self.upper, center=self.center, scale=self.scale,
                          frozen_at=self.frozen_at)

    def check(self, samples: Sequence[float]) -> None:
        if self.is_frozen:
            return
        alpha = np.asarray(self.alpha(np.asarray(samples, dtype=float)))
        if np.any(alpha <= 0.0):
            raise InvalidModelError("fast factor volatility alpha must be strictly positive on the domain interior")

    @cached_property
    def law(self) -> "InvariantLaw":
        return _build_invariant_law(self)


# ============ Invariant Law ============

@dataclass(frozen=True, eq=False)
class InvariantLaw:
    """
    Normalized invariant density on truncated bounds plus quadrature nodes.

    Weights are probabilities: sum(weights) == 1.
    """
    lower: float
    upper: float
    nodes: np.ndarray
    weights: np.ndarray
    log_norm: float = 0.0
    log_speed: Optional[Callable] = None
    alpha: Optional[Callable] = None

    @property
    def is_point_mass(self) -> bool:
        return self.log_speed is None

    def log_density(self, y):
        y = np.asarray(y, dtype=float)
        return self.log_speed(y) - 2.0 * np.log(self.alpha(y)) - self.log_norm

    def density(self, y):
        if self.is_point_mass:
            raise ValueError("a point mass has no density")
        return np.exp(self.log_density(y))

    def expect(self, values) -> float:
        return float(np.dot(self.weights, np.asarray(values, dtype=float)))

    @property
    def median(self) -> float:
        cumulative = np.cumsum(self.weights)
        return float(self.nodes[np.searchsorted(cumulative, 0.5)])


def _gauss_legendre(lower: float, upper: float, panels: int) -> Tuple[np.ndarray, np.ndarray]:
    base_x, base_w = np.polynomial.legendre.leggauss(NODES_PER_PANEL)
    edges = np.linspace(lower, upper, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * base_x[None, :]).ravel()
    weights = (half[:, None] * base_w[None, :]).ravel()
    return nodes, weights


def _scan_side(log_density: Callable[[float], float], center: float, scale: float,
               bound: float, direction: float) -> Tuple[float, float]:
    """Walk away from the center until the log-density drops LOG_CUTOFF below its running peak"""
    peak = log_density(center)
    previous = center
    for k in range(1, MAX_SCAN_DOUBLINGS + 1):
        if math.isfinite(bound):
            probe = bound + (center - bound) * 2.0 ** (-k)
        else:
            probe = center + direction * scale * 2.0 ** (k - 1)
        value = log_density(probe)
        peak = max(peak, value)
        if value < peak - LOG_CUTOFF:
            target = peak - LOG_CUTOFF
            lo, hi = sorted((previous, probe))
            try:
                return brentq(lambda y: log_density(y) - target, lo, hi, xtol=1e-12 * (1.0 + abs(hi))), peak
            except ValueError:
                return probe, peak
        previous = probe
    if math.isfinite(bound):
        return bound, peak
    raise InvalidModelError("fast factor speed density is not integrable: no decay found while scanning")


def _dense_log_speed(f: FastFactor, lower: float, upper: float) -> Callable:
    """L(y) = int_center^y 2 gamma / alpha^2 as a dense ODE solution on [lower, upper]"""
    def rhs(y, state):
        a = float(f.alpha(y))
        return [2.0 * float(f.gamma(y)) / (a * a)]

    pieces = []
    for end in (upper, lower):
        if end == f.center:
            continue
        sol = solve_ivp(rhs, (f.center, end), [0.0], method="DOP853", dense_output=True,
                        rtol=ODE_RTOL, atol=ODE_ATOL)
        if not sol.success:
            raise NumericError(f"invariant log-density integration failed: {sol.message}")
        pieces.append((min(f.center, end), max(f.center, end), sol.sol))

    def log_speed(y):
        y = np.asarray(y, dtype=float)
        out = np.zeros_like(y)
        for lo, hi, sol in pieces:
            mask = (y >= lo) & (y <= hi)
            if np.any(mask):
                out[mask] = sol(y[mask])[0]
        return out if out.ndim else float(out)

    return log_speed


def _build_invariant_law(f: FastFactor) -> InvariantLaw:
    if f.is_frozen:
        value = float(f.frozen_at)
        return InvariantLaw(lower=value, upper=value, nodes=np.array([value]), weights=np.array([1.0]))

    if not (f.lower < f.center < f.upper):
        raise InvalidModelError(f"fast factor center {f.center} must lie inside ({f.lower}, {f.upper})")

    def coarse_log_density(y: float) -> float:
        drift = quad(lambda z: 2.0 * float(f.gamma(z)) / float(f.alpha(z)) ** 2, f.center, y,
                     epsabs=1e-10, epsrel=1e-10, limit=200)[0]
        return drift - 2.0 * math.log(float(f.alpha(y)))

    upper, peak_up = _scan_side(coarse_log_density, f.center, f.scale, f.upper, 1.0)
    lower, peak_down = _scan_side(coarse_log_density, f.center, f.scale, f.lower, -1.0)
    log_speed = _dense_log_speed(f, lower, upper)
    peak = max(peak_up, peak_down)

    def unnormalized(nodes):
        return np.exp(log_speed(nodes) - 2.0 * np.log(f.alpha(nodes)) - peak)

    panels = INITIAL_PANELS
    nodes, gl = _gauss_legendre(lower, upper, panels)
    raw = gl * unnormalized(nodes)
    mass = math.fsum(raw)
    for _ in range(MAX_REFINEMENTS):
        fine_nodes, fine_gl = _gauss_legendre(lower, upper, 2 * panels)
        fine_raw = fine_gl * unnormalized(fine_nodes)
        fine_mass = math.fsum(fine_raw)
        if not math.isfinite(fine_mass) or fine_mass <= 0.0:
            break
        converged = abs(fine_mass - mass) <= MASS_TOL * fine_mass
        panels, nodes, raw, mass = 2 * panels, fine_nodes, fine_raw, fine_mass
        if converged:
            break
    else:
        raise InvalidModelError("invariant density mass does not converge under refinement")
    if not math.isfinite(mass) or mass <= 0.0:
        raise InvalidModelError("invariant density mass diverges under refinement")

    logger.debug("invariant law on [%.6g, %.6g] with %d nodes", lower, upper, nodes.size)
    return InvariantLaw(lower=lower, upper=upper, nodes=nodes, weights=raw / mass,
                        log_norm=peak + math.log(mass), log_speed=log_speed, alpha=f.alpha)


def invariant_density(f: FastFactor) -> InvariantLaw:
    """Normalized invariant density of the fast factor, with precomputed Gauss-Legendre nodes"""
    return f.law


# ============ Sharpe Ratio Families ============

def sqrt_sharpe(lambda_s, lambda_f) -> Tuple[Callable, Callable]:
    """lambda(y1, y2) = sqrt(y1) Lambda_s + sqrt(y2) Lambda_f and its y1-derivative"""
    ls = np.asarray(lambda_s, dtype=float)
    lf = np.asarray(lambda_f, dtype=float)

    def sharpe(y1, y2):
        root1 = np.sqrt(np.maximum(np.asarray(y1, dtype=float), 0.0))[..., None]
        root2 = np.sqrt(np.maximum(np.asarray(y2, dtype=float), 0.0))[..., None]
        return root1 * ls + root2 * lf

    def sharpe_dy1(y1, y2):
        root1 = np.sqrt(np.asarray(y1, dtype=float))[..., None]
        root2 = np.asarray(y2, dtype=float)[..., None]
        return ls / (2.0 * root1) + 0.0 * root2 * lf

    return sharpe, sharpe_dy1


def affine_sharpe(base, slope_s, slope_f) -> Tuple[Callable, Callable]:
    """lambda(y1, y2) = base + y1 slope_s + y2 slope_f"""
    base = np.asarray(base, dtype=float)
    ss = np.asarray(slope_s, dtype=float)
    sf = np.asarray(slope_f, dtype=float)

    def sharpe(y1, y2):
        y1 = np.asarray(y1, dtype=float)[..., None]
        y2 = np.asarray(y2, dtype=float)[..., None]
        return base + y1 * ss + y2 * sf

    def sharpe_dy1(y1, y2):
        y2 = np.asarray(y2, dtype=float)[..., None]
        return ss + 0.0 * y2 * sf

    return sharpe, sharpe_dy1


# ============ Market Model ============

@dataclass(frozen=True, eq=False)
class MarketModel:
    """
    Assets, factors and initial utility.

    sigma(y1, y2) is the d x n matrix whose columns are the asset volatility
    vectors; lambda(y1, y2) is the d-vector market price of risk.
    """
    lambda_fn: Callable
    sigma_fn: Callable
    rho_s: np.ndarray
    rho_f: np.ndarray
    rho_sf: float
    slow: SlowFactor
    fast: FastFactor
    widder: WidderMeasure
    v0: InitialUtility
    dlambda_dy1: Optional[Callable] = None
    name: str = "custom"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        rho_s = np.asarray(self.rho_s, dtype=float).ravel()
        rho_f = np.asarray(self.rho_f, dtype=float).ravel()
        if rho_s.shape != rho_f.shape:
            raise InvalidModelError("rho_s and rho_f must both have length d")
        object.__setattr__(self, "rho_s", rho_s)
        object.__setattr__(self, "rho_f", rho_f)
        object.__setattr__(self, "rho_sf", float(self.rho_sf))

    @property
    def d(self) -> int:
        return self.rho_s.size

    def sharpe(self, y1, y2) -> np.ndarray:
        return np.asarray(self.lambda_fn(y1, y2), dtype=float)

    def sharpe_dy1(self, y1, y2) -> np.ndarray:
        if self.dlambda_dy1 is not None:
            return np.asarray(self.dlambda_dy1(y1, y2), dtype=float)
        h = LAMBDA_FD_STEP
        return (self.sharpe(y1 + h, y2) - self.sharpe(y1 - h, y2)) / (2.0 * h)

    def sigma(self, y1, y2) -> np.ndarray:
        return np.asarray(self.sigma_fn(y1, y2), dtype=float)

    def n_assets(self, y1: float, y2: float) -> int:
        return self.sigma(y1, y2).shape[-1]

    @property
    def is_slow_only(self) -> bool:
        return self.fast.is_frozen

    @property
    def is_fast_only(self) -> bool:
        return self.slow.is_frozen

    def correlation_matrix(self) -> np.ndarray:
        """Correlation of (W_1..W_d, B1, B2)"""
        d = self.d
        corr = np.eye(d + 2)
        corr[:d, d] = corr[d, :d] = self.rho_s
        corr[:d, d + 1] = corr[d + 1, :d] = self.rho_f
        corr[d, d + 1] = corr[d + 1, d] = self.rho_sf
        return corr

    def cholesky(self) -> np.ndarray:
        try:
            return np.linalg.cholesky(self.correlation_matrix())
        except np.linalg.LinAlgError as exc:
            raise InvalidModelError(f"correlation matrix of (W, B1, B2) is not positive definite: {exc}") from exc

    def sample_states(self) -> Tuple[np.ndarray, np.ndarray]:
        """A small grid of interior states for load-time checks"""
        if self.slow.is_frozen:
            y1 = np.array([self.slow.frozen_at])
        else:
            lo = self.slow.lower if math.isfinite(self.slow.lower) else -2.0
            hi = self.slow.upper if math.isfinite(self.slow.upper) else 3.0
            y1 = np.linspace(lo, hi, 7)[1:-1]
        law = invariant_density(self.fast)
        if law.is_point_mass:
            y2 = law.nodes
        else:
            y2 = np.quantile(law.nodes, [0.2, 0.4, 0.6, 0.8])
        return y1, y2

    def check_invariants(self) -> None:
        """Everything checked when a model is loaded"""
        self.cholesky()
        y1s, y2s = self.sample_states()
        self.slow.check(y1s)
        self.fast.check(y2s)
        for y1 in y1s:
            for y2 in y2s:
                sig = self.sigma(y1, y2)
                if sig.shape[0] != self.d:
                    raise InvalidModelError(f"sigma must have d={self.d} rows, got shape {sig.shape}")
                singular = np.linalg.svd(sig, compute_uv=False)
                if singular.size < self.d or singular[-1] <= 1e-10 * singular[0]:
                    raise InvalidModelError("sigma must have full row rank d at sampled states")
                if self.sharpe(y1, y2).shape[-1] != self.d:
                    raise InvalidModelError("lambda must return a vector of length d")
        self.v0.check_shape(np.linspace(0.25, 5.0, 12) + self.v0.domain_lower)
        datum_consistency(self.widder, self.v0, [x + self.v0.domain_lower for x in (0.5, 1.0, 2.0, 4.0)])


# ============ Averaged Quantities ============

def _sharpe_at_nodes(model: MarketModel, y1: float, nodes: np.ndarray) -> np.ndarray:
    lam = model.sharpe(y1, nodes)
    return np.broadcast_to(lam, (nodes.size, model.d))


def lambda_bar(model: MarketModel, y1: float) -> float:
    """Root-mean-square of ||lambda(y1, .)|| under the invariant law"""
    law = invariant_density(model.fast)
    lam = _sharpe_at_nodes(model, y1, law.nodes)
    value = law.expect(np.einsum("ij,ij->i", lam, lam))
    if not math.isfinite(value):
        raise NumericError(f"lambda_bar quadrature failed at y1={y1}")
    return math.sqrt(max(value, 0.0))


@dataclass(frozen=True, eq=False)
class PoissonSolution:
    """
    Derivative and centered antiderivative of the Poisson corrector at fixed y1.

    The flux F(y) = int_lower^y (||lambda||^2 - lambda_bar^2) m dz is kept
    as two dense solutions, one from each truncation bound; each query uses
    the one anchored on its own side of the median.
    """
    law: InvariantLaw
    alpha: Callable
    forward: Optional[Callable] = None
    backward: Optional[Callable] = None
    antiderivative: Optional[Callable] = None
    phi_mean: float = 0.0
    centering: float = 0.0

    @property
    def vanishes(self) -> bool:
        return self.forward is None

    def flux(self, y):
        y = np.asarray(y, dtype=float)
        if self.vanishes:
            return np.zeros_like(y)
        return np.where(y <= self.law.median, self.forward(y), self.backward(y))

    def phi_prime(self, y):
        y = np.asarray(y, dtype=float)
        if self.vanishes:
            return np.zeros_like(y)
        if np.any((y < self.law.lower) | (y > self.law.upper)):
            raise RangeError(f"y2 outside the truncated fast domain [{self.law.lower}, {self.law.upper}]")
        a = np.asarray(self.alpha(y), dtype=float)
        return -2.0 * self.flux(y) / (a * a * self.law.density(y))

    def phi(self, y):
        y = np.asarray(y, dtype=float)
        if self.vanishes:
            return np.zeros_like(y)
        return self.antiderivative(y) - self.phi_mean


def _dense_solve(rhs, start: float, end: float, scale: float) -> Callable:
    sol = solve_ivp(rhs, (start, end), [0.0], method="DOP853", dense_output=True,
                    rtol=ODE_RTOL, atol=ODE_ATOL * scale)
    if not sol.success:
        raise NumericError(f"Poisson corrector integration failed: {sol.message}")
    return lambda y: sol.sol(y)[0]


@lru_cache(maxsize=512)
def poisson_solution(model: MarketModel, y1: float) -> PoissonSolution:
    """Solve L_{y2} phi = -(||lambda(y1, .)||^2 - lambda_bar^2(y1)) in flux form"""
    law = invariant_density(model.fast)
    if law.is_point_mass:
        return PoissonSolution(law=law, alpha=model.fast.alpha)

    lam = _sharpe_at_nodes(model, y1, law.nodes)
    norms = np.einsum("ij,ij->i", lam, lam)
    lbar_sq = law.expect(norms)
    if np.max(np.abs(norms - lbar_sq)) <= SOURCE_ZERO_TOL * (1.0 + lbar_sq):
        return PoissonSolution(law=law, alpha=model.fast.alpha)

    scale = 1.0 + lbar_sq

    def source(y, state):
        lam_y = model.sharpe(y1, y)
        return [(float(np.dot(lam_y, lam_y)) - lbar_sq) * float(law.density(y))]

    forward = _dense_solve(source, law.lower, law.upper, scale)
    backward = _dense_solve(source, law.upper, law.lower, scale)
    centering = float(forward(law.upper))
    if abs(centering) > CENTERING_TOL * scale:
        raise InvalidModelError(
            f"Poisson source is not centered under the invariant law at y1={y1} (residual {centering:.2e})"
        )

    partial = PoissonSolution(law=law, alpha=model.fast.alpha, forward=forward, backward=backward,
                              centering=centering)
    median = law.median

    def slope(y, state):
        return [float(partial.phi_prime(y))]

    up = _dense_solve(slope, median, law.upper, scale)
    down = _dense_solve(slope, median, law.lower, scale)

    def antiderivative(y):
        y = np.asarray(y, dtype=float)
        return np.where(y >= median, up(y), down(y))

    phi_mean = law.expect(antiderivative(law.nodes))
    return PoissonSolution(law=law, alpha=model.fast.alpha, forward=forward, backward=backward,
                           antiderivative=antiderivative, phi_mean=phi_mean, centering=centering)


def phi_prime(model: MarketModel, y1: float, y2: float) -> float:
    """d phi / d y2 = -2 F(y2) / (alpha^2(y2) m(y2))"""
    return float(poisson_solution(model, y1).phi_prime(y2))


def phi(model: MarketModel, y1: float, y2: float) -> float:
    """Corrector phi, centered so that its mean under the invariant law is zero"""
    return float(poisson_solution(model, y1).phi(y2))


def poisson_residual(model: MarketModel, y1: float, y2: float, step: float = 1e-4) -> float:
    """
    Plug-back residual alpha^2 phi'' / 2 + gamma phi' + ||lambda||^2 - lambda_bar^2,
    relative to 1 + lambda_bar^2. phi'' is a central difference of phi'.
    """
    solution = poisson_solution(model, y1)
    lam = model.sharpe(y1, y2)
    lbar_sq = lambda_bar(model, y1) ** 2
    if solution.vanishes:
        return abs(float(lam @ lam) - lbar_sq) / (1.0 + lbar_sq)
    h = step * max(1.0, abs(y2))
    h = min(h, 0.25 * (y2 - solution.law.lower), 0.25 * (solution.law.upper - y2))
    if not h > 0.0:
        raise RangeError(f"y2={y2} sits on the truncation bound; no room for a difference step")
    second = central_difference(lambda z: float(solution.phi_prime(z)), y2, 1, h)
    alpha = float(model.fast.alpha(y2))
    residual = 0.5 * alpha * alpha * second + float(model.fast.gamma(y2)) * float(solution.phi_prime(y2))
    residual += float(lam @ lam) - lbar_sq
    return abs(residual) / (1.0 + lbar_sq)


def averaged_coefficients(model: MarketModel, y1: float) -> AveragedCoefficients:
    """lambda_bar, its y1-derivative and the correction constants C10, C01 at y1"""
    law = invariant_density(model.fast)
    nodes = law.nodes
    lam = _sharpe_at_nodes(model, y1, nodes)
    lbar = lambda_bar(model, y1)

    mean_lam = law.weights @ lam
    c10 = float(model.rho_s @ mean_lam) * float(model.slow.kappa(y1))

    poisson = poisson_solution(model, y1)
    if poisson.vanishes or not np.any(model.rho_f):
        c01 = 0.0
    else:
        weight = poisson.phi_prime(nodes) * np.asarray(model.fast.alpha(nodes), dtype=float)
        c01 = float(model.rho_f @ (law.weights @ (lam * weight[:, None])))

    dlam = np.broadcast_to(model.sharpe_dy1(y1, nodes), lam.shape)
    numerator = law.expect(np.einsum("ij,ij->i", lam, dlam))
    if lbar == 0.0:
        if numerator != 0.0:
            raise NumericError(f"lambda_bar vanishes at y1={y1} while d lambda / d y1 does not: division by zero")
        lbar_prime = 0.0
    else:
        lbar_prime = numerator / lbar
    return AveragedCoefficients(lambda_bar=lbar, lambda_bar_prime=lbar_prime, c10=c10, c01=c01)
