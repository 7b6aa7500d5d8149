# -*- coding: utf-8 -*-
"""
Drift audit of a value function along a feedback portfolio

Ito's formula for V(t, X, Y1, Y2) under the model dynamics gives the drift

    Theta = V_t + V_x lambda.e + V_xx |e|^2 / 2
          + delta b V_y1 + delta kappa^2 V_y1y1 / 2 + sqrt(delta) kappa (rho_s.e) V_xy1
          + gamma V_y2 / eps + alpha^2 V_y2y2 / (2 eps) + alpha (rho_f.e) V_xy2 / sqrt(eps)
          + sqrt(delta / eps) kappa alpha rho_sf V_y1y2

with e = sigma pi the exposure. Theta vanishes along the optimum of an exact
solution and is O(delta + epsilon) along the approximate portfolio.

Path simulation runs Euler-Maruyama on fixed-size blocks, each block drawing
from its own SeedSequence substream, so results do not depend on the thread
count.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import InvalidModelError, NumericError
from .expansion import ValueSurface, approx_value
from .factors import MarketModel
from .models import DriftReport, MartingaleStats, PowerModelParams, ThetaScanRow
from .portfolio import pi_approx, sigma_pinv
from .power import RiccatiSolution, SeparableBenchmark, riccati_solve, riccati_stationary
from .widder import central_difference

logger = logging.getLogger(__name__)


BLOCK_SIZE = 2048
EXPLOSION_BOUND = 1e8
FAST_STEP_RATIO = 10.0
PATH_DUMP_WARN = 10_000_000
DEFAULT_FD_STEP = 1e-3

STATE_NAMES = ("t", "x", "y1", "y2")


# ============ Value Functions ============

@dataclass(frozen=True)
class Partials:
    """Partial derivatives of a value function; arrays when states are arrays"""
    v_t: np.ndarray
    v_x: np.ndarray
    v_xx: np.ndarray
    v_y1: np.ndarray = 0.0
    v_y1y1: np.ndarray = 0.0
    v_xy1: np.ndarray = 0.0
    v_y2: np.ndarray = 0.0
    v_y2y2: np.ndarray = 0.0
    v_xy2: np.ndarray = 0.0
    v_y1y2: np.ndarray = 0.0

    def check_finite(self) -> None:
        for name, value in self.__dict__.items():
            if not np.all(np.isfinite(value)):
                raise NumericError(f"partial derivative {name} is not finite")


@dataclass(frozen=True)
class _FactorGrowth:
    """q (A1(t) y + A2(t)) for one factor of the power solution"""
    q: float
    solution: Optional[RiccatiSolution] = None
    frozen_rate: float = 0.0

    def a1(self, t):
        if self.solution is None:
            return -self.frozen_rate * np.asarray(t, dtype=float)
        return self.solution.A1(t)

    def a1_prime(self, t):
        if self.solution is None:
            return np.full_like(np.asarray(t, dtype=float), -self.frozen_rate)
        return self.solution.A1_prime(t)

    def a2(self, t):
        return 0.0 * np.asarray(t, dtype=float) if self.solution is None else self.solution.A2(t)

    def a2_prime(self, t):
        return 0.0 * np.asarray(t, dtype=float) if self.solution is None else self.solution.A2_prime(t)


def _slow_growth(p: PowerModelParams, delta: float) -> _FactorGrowth:
    if delta == 0.0:
        return _FactorGrowth(q=1.0, frozen_rate=0.5 * p.Gamma * p.lambda_sq)
    return _FactorGrowth(q=p.q, solution=riccati_solve(p.with_delta(delta)))


def _fast_growth(p: PowerModelParams, epsilon: float) -> _FactorGrowth:
    if epsilon <= 0.0:
        raise InvalidModelError("the exact fast benchmark needs epsilon > 0")
    return _FactorGrowth(q=p.q, solution=riccati_stationary(p.with_delta(1.0 / epsilon)))


class ExactPowerSurface:
    """
    Exact power value with a slow piece in y1, a fast piece in y2, or both.

    The slow piece is the transient Riccati solution at delta (frozen-factor
    limit at delta = 0), the fast piece the stationary branch at 1/epsilon.
    """

    def __init__(self, gamma_ra: float, slow: Optional[PowerModelParams] = None,
                 fast: Optional[PowerModelParams] = None, delta: float = 0.0, epsilon: float = 0.0):
        self.gamma_ra = gamma_ra
        self.slow = slow
        self.fast = fast
        self.delta = delta
        self.epsilon = epsilon

    @classmethod
    def slow_benchmark(cls, p: PowerModelParams, delta: float) -> "ExactPowerSurface":
        return cls(p.gamma_ra, slow=p, delta=delta)

    @classmethod
    def fast_benchmark(cls, p: PowerModelParams, epsilon: float) -> "ExactPowerSurface":
        return cls(p.gamma_ra, fast=p, epsilon=epsilon)

    @classmethod
    def separable(cls, benchmark: SeparableBenchmark, delta: float, epsilon: float) -> "ExactPowerSurface":
        return cls(benchmark.gamma_ra, slow=benchmark.slow, fast=benchmark.fast, delta=delta, epsilon=epsilon)

    @cached_property
    def _slow_growth(self) -> Optional[_FactorGrowth]:
        return None if self.slow is None else _slow_growth(self.slow, self.delta)

    @cached_property
    def _fast_growth(self) -> Optional[_FactorGrowth]:
        return None if self.fast is None else _fast_growth(self.fast, self.epsilon)

    def _pieces(self, t, y1, y2):
        """Exponent, its t-derivative, and the y1 and y2 loadings q A1"""
        exponent, rate = 0.0, 0.0
        load1 = load2 = 0.0
        for growth, y in ((self._slow_growth, y1), (self._fast_growth, y2)):
            if growth is None:
                continue
            y = np.asarray(y, dtype=float)
            load = growth.q * growth.a1(t)
            exponent = exponent + load * y + growth.q * growth.a2(t)
            rate = rate + growth.q * (growth.a1_prime(t) * y + growth.a2_prime(t))
            if growth is self._slow_growth:
                load1 = load
            else:
                load2 = load
        return exponent, rate, load1, load2

    def value(self, t, x, y1, y2):
        exponent, _, _, _ = self._pieces(t, y1, y2)
        g = self.gamma_ra
        return g ** g * np.power(np.asarray(x, dtype=float), 1.0 - g) / (1.0 - g) * np.exp(exponent)

    def partials(self, t, x, y1, y2) -> Partials:
        exponent, rate, load1, load2 = self._pieces(t, y1, y2)
        g = self.gamma_ra
        x = np.asarray(x, dtype=float)
        growth = np.exp(exponent)
        v = g ** g * np.power(x, 1.0 - g) / (1.0 - g) * growth
        v_x = g ** g * np.power(x, -g) * growth
        return Partials(
            v_t=v * rate, v_x=v_x, v_xx=-g ** (g + 1.0) * np.power(x, -g - 1.0) * growth,
            v_y1=v * load1, v_y1y1=v * load1 * load1, v_xy1=v_x * load1,
            v_y2=v * load2, v_y2y2=v * load2 * load2, v_xy2=v_x * load2,
            v_y1y2=v * load1 * load2,
        )


@dataclass(frozen=True)
class FiniteDifferenceSurface:
    """Partials of a scalar value function by fourth-order central differences"""
    fn: Callable[[float, float, float, float], float]
    steps: Dict[str, float] = field(default_factory=lambda: {name: DEFAULT_FD_STEP for name in STATE_NAMES})

    def __post_init__(self):
        for name in STATE_NAMES:
            if not self.steps.get(name, 0.0) > 0.0:
                raise InvalidModelError(f"finite-difference step for {name} must be positive")

    def value(self, t, x, y1, y2):
        if all(np.ndim(v) == 0 for v in (t, x, y1, y2)):
            return self.fn(t, x, y1, y2)
        return np.vectorize(self.fn, otypes=[float])(t, x, y1, y2)

    def _along(self, state: List[float], index: int) -> Callable[[float], float]:
        def shifted(z: float) -> float:
            moved = list(state)
            moved[index] = z
            return self.fn(*moved)
        return shifted

    def _derivative(self, state: List[float], name: str, order: int) -> float:
        index = STATE_NAMES.index(name)
        return central_difference(self._along(state, index), state[index], order, self.steps[name])

    def _cross(self, state: List[float], first: str, second: str) -> float:
        index = STATE_NAMES.index(first)

        def inner(z: float) -> float:
            moved = list(state)
            moved[index] = z
            return self._derivative(moved, second, 1)

        return central_difference(inner, state[index], 1, self.steps[first])

    def partials(self, t, x, y1, y2) -> Partials:
        state = [float(t), float(x), float(y1), float(y2)]
        return Partials(
            v_t=self._derivative(state, "t", 1),
            v_x=self._derivative(state, "x", 1),
            v_xx=self._derivative(state, "x", 2),
            v_y1=self._derivative(state, "y1", 1),
            v_y1y1=self._derivative(state, "y1", 2),
            v_xy1=self._cross(state, "x", "y1"),
            v_y2=self._derivative(state, "y2", 1),
            v_y2y2=self._derivative(state, "y2", 2),
            v_xy2=self._cross(state, "x", "y2"),
            v_y1y2=self._cross(state, "y1", "y2"),
        )


def expansion_surface(surface: ValueSurface, delta: float, epsilon: float,
                      steps: Optional[Dict[str, float]] = None) -> FiniteDifferenceSurface:
    """The three-term approximation as a value function, differentiated numerically"""
    def fn(t, x, y1, y2):
        return approx_value(surface, t, x, y1, y2, delta, epsilon).combined

    return FiniteDifferenceSurface(fn, steps) if steps else FiniteDifferenceSurface(fn)


# ============ Feedback Maps ============

def _to_portfolio(model: MarketModel, y1, y2, exposure: np.ndarray) -> np.ndarray:
    sigma = model.sigma(y1, y2)
    if sigma.ndim == 2:
        return exposure @ sigma_pinv(sigma).T
    return np.einsum("...nd,...d->...n", np.linalg.pinv(sigma), exposure)


def _factor_active(model: MarketModel) -> Tuple[bool, bool]:
    return not model.slow.is_frozen, not model.fast.is_frozen


def exact_feedback(value_fn, model: MarketModel, delta: float, epsilon: float) -> Callable:
    """
    Vectorized optimizer of the HJB equation for a value function with partials:
    e = -(lambda V_x + sqrt(delta) kappa rho_s V_xy1 + alpha rho_f V_xy2 / sqrt(eps)) / V_xx.
    """
    slow_on, fast_on = _factor_active(model)

    def feedback(t, x, y1, y2):
        d = value_fn.partials(t, x, y1, y2)
        v_x = np.asarray(d.v_x)[..., None]
        numerator = model.sharpe(y1, y2) * v_x
        if slow_on and delta > 0.0:
            kappa = np.asarray(model.slow.kappa(y1), dtype=float)[..., None]
            numerator = numerator + math.sqrt(delta) * kappa * model.rho_s * np.asarray(d.v_xy1)[..., None]
        if fast_on and epsilon > 0.0:
            alpha = np.asarray(model.fast.alpha(y2), dtype=float)[..., None]
            numerator = numerator + alpha / math.sqrt(epsilon) * model.rho_f * np.asarray(d.v_xy2)[..., None]
        exposure = -numerator / np.asarray(d.v_xx)[..., None]
        return _to_portfolio(model, y1, y2, exposure)

    return feedback


def approx_feedback(surface: ValueSurface, delta: float, epsilon: float) -> Callable:
    """Feedback map of the approximate portfolio at one state"""
    def feedback(t, x, y1, y2):
        return pi_approx(surface, t, x, y1, y2, delta, epsilon).as_array()
    return feedback


def zero_feedback(n_assets: int) -> Callable:
    def feedback(t, x, y1, y2):
        return np.zeros(np.shape(x) + (n_assets,))
    return feedback


def per_path_feedback(fn: Callable) -> Callable:
    """Lift a single-state feedback map to arrays of paths"""
    def feedback(t, x, y1, y2):
        x, y1, y2 = np.broadcast_arrays(np.asarray(x, float), np.asarray(y1, float), np.asarray(y2, float))
        if x.ndim == 0:
            return np.asarray(fn(t, float(x), float(y1), float(y2)))
        return np.stack([np.asarray(fn(t, a, b, c)) for a, b, c in zip(x, y1, y2)])
    return feedback


# ============ Generator ============

@dataclass(frozen=True)
class GeneratorInput:
    value_fn: object
    portfolio_fn: Callable
    model: MarketModel
    delta: float
    epsilon: float

    def __post_init__(self):
        if self.delta < 0.0 or self.epsilon < 0.0:
            raise InvalidModelError("delta and epsilon must be non-negative")
        if not self.model.fast.is_frozen and self.epsilon == 0.0:
            raise InvalidModelError("an active fast factor needs epsilon > 0 in the generator")
        steps = getattr(self.value_fn, "steps", None)
        if steps is not None and any(v <= 0.0 for v in steps.values()):
            raise InvalidModelError("finite-difference steps must be positive")


def generator_terms(g: GeneratorInput, state: Tuple[float, float, float, float]) -> Dict[str, float]:
    """Each term of the drift, keyed by name; frozen factors contribute nothing"""
    t, x, y1, y2 = state
    model, delta, eps = g.model, g.delta, g.epsilon
    try:
        d = g.value_fn.partials(t, x, y1, y2)
    except (ArithmeticError, ValueError) as exc:
        raise NumericError(f"value partials failed at {state}: {exc}") from exc
    d.check_finite()

    exposure = model.sigma(y1, y2) @ np.asarray(g.portfolio_fn(t, x, y1, y2), dtype=float)
    lam = model.sharpe(y1, y2)
    terms = {
        "v_t": float(d.v_t),
        "wealth_drift": float(d.v_x) * float(lam @ exposure),
        "wealth_diffusion": 0.5 * float(d.v_xx) * float(exposure @ exposure),
    }
    slow_on, fast_on = _factor_active(model)
    if slow_on:
        kappa = float(model.slow.kappa(y1))
        terms["slow_drift"] = delta * float(model.slow.b(y1)) * float(d.v_y1)
        terms["slow_diffusion"] = 0.5 * delta * kappa * kappa * float(d.v_y1y1)
        terms["slow_cross"] = math.sqrt(delta) * kappa * float(model.rho_s @ exposure) * float(d.v_xy1)
    if fast_on:
        alpha = float(model.fast.alpha(y2))
        terms["fast_drift"] = float(model.fast.gamma(y2)) / eps * float(d.v_y2)
        terms["fast_diffusion"] = 0.5 * alpha * alpha / eps * float(d.v_y2y2)
        terms["fast_cross"] = alpha / math.sqrt(eps) * float(model.rho_f @ exposure) * float(d.v_xy2)
    if slow_on and fast_on:
        terms["factor_cross"] = (math.sqrt(delta / eps) * float(model.slow.kappa(y1)) * float(model.fast.alpha(y2))
                                 * model.rho_sf * float(d.v_y1y2))
    return terms


def generator_theta(g: GeneratorInput, state: Tuple[float, float, float, float]) -> float:
    return math.fsum(generator_terms(g, state).values())


def relative_theta(g: GeneratorInput, state: Tuple[float, float, float, float]) -> float:
    """|Theta| over the sum of absolute terms"""
    terms = generator_terms(g, state)
    scale = math.fsum(abs(v) for v in terms.values())
    return abs(math.fsum(terms.values())) / scale if scale > 0.0 else 0.0


def theta_scan(build: Callable[[float, float], GeneratorInput], grid: Sequence[Tuple[float, float, float, float]],
               pairs: Sequence[Tuple[float, float]], threads: int = 1) -> DriftReport:
    """sup |Theta| over the grid and its ratio to delta + epsilon, per (delta, epsilon)"""
    if not grid:
        raise InvalidModelError("theta scan needs a nonempty state grid")

    def scan(pair: Tuple[float, float]) -> ThetaScanRow:
        delta, epsilon = pair
        g = build(delta, epsilon)
        theta = [generator_theta(g, state) for state in grid]
        sup = max(abs(v) for v in theta)
        scale = delta + epsilon
        return ThetaScanRow(delta=delta, epsilon=epsilon, sup_abs_theta=sup,
                            ratio=sup / scale if scale > 0.0 else None, theta=theta)

    if threads <= 1:
        rows = [scan(pair) for pair in pairs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(scan, pairs))
    return DriftReport(grid=[tuple(map(float, s)) for s in grid], rows=rows)


# ============ Path Simulation ============

@dataclass
class PathEnsemble:
    """Terminal states and value deviations of simulated paths, in block order"""
    deviations: np.ndarray
    excluded: np.ndarray
    terminal_x: np.ndarray
    terminal_y1: np.ndarray
    terminal_y2: np.ndarray
    paths: Optional[Dict[str, np.ndarray]] = None

    @property
    def n_excluded(self) -> int:
        return int(self.excluded.sum())

    def save(self, path) -> None:
        arrays = {"deviations": self.deviations, "excluded": self.excluded, "terminal_x": self.terminal_x,
                  "terminal_y1": self.terminal_y1, "terminal_y2": self.terminal_y2}
        if self.paths:
            arrays.update(self.paths)
        np.savez_compressed(path, **arrays)


@dataclass(frozen=True)
class _Simulation:
    model: MarketModel
    portfolio_fn: Callable
    value_fn: object
    x0: float
    y10: float
    y20: float
    horizon: float
    dt: float
    n_steps: int
    delta: float
    epsilon: float
    antithetic: bool
    keep_paths: bool
    cholesky: np.ndarray
    start_value: float

    def _floor(self, y, factor):
        return np.maximum(y, factor.lower) if math.isfinite(factor.lower) else y

    def run_block(self, seed: np.random.SeedSequence, size: int) -> dict:
        rng = np.random.Generator(np.random.PCG64(seed))
        model = self.model
        d = model.d
        slow_on, fast_on = _factor_active(model)
        x = np.full(size, self.x0)
        y1 = np.full(size, self.y10)
        y2 = np.full(size, self.y20)
        alive = np.ones(size, dtype=bool)
        root_dt = math.sqrt(self.dt)
        trace = {"x": [x.copy()], "y1": [y1.copy()], "y2": [y2.copy()]} if self.keep_paths else None

        for step in range(self.n_steps):
            t = step * self.dt
            draws = rng.standard_normal((size // 2 if self.antithetic else size, d + 2))
            if self.antithetic:
                draws = np.concatenate([draws, -draws])
            dw = draws @ self.cholesky.T * root_dt

            y1c = self._floor(y1, model.slow)
            y2c = self._floor(y2, model.fast)
            pi = np.asarray(self.portfolio_fn(t, x, y1c, y2c), dtype=float)
            sigma = model.sigma(y1c, y2c)
            exposure = pi @ sigma.T if sigma.ndim == 2 else np.einsum("pdn,pn->pd", sigma, pi)
            lam = np.broadcast_to(model.sharpe(y1c, y2c), exposure.shape)

            x = x + np.einsum("pd,pd->p", exposure, lam) * self.dt + np.einsum("pd,pd->p", exposure, dw[:, :d])
            if slow_on:
                y1 = y1 + self.delta * model.slow.b(y1c) * self.dt \
                    + math.sqrt(self.delta) * model.slow.kappa(y1c) * dw[:, d]
            if fast_on:
                y2 = y2 + model.fast.gamma(y2c) / self.epsilon * self.dt \
                    + model.fast.alpha(y2c) / math.sqrt(self.epsilon) * dw[:, d + 1]

            ok = np.isfinite(x) & np.isfinite(y1) & np.isfinite(y2)
            ok &= (np.abs(x) <= EXPLOSION_BOUND) & (np.abs(y1) <= EXPLOSION_BOUND) & (np.abs(y2) <= EXPLOSION_BOUND)
            alive &= ok
            x = np.where(alive, x, self.x0)
            y1 = np.where(alive, y1, self.y10)
            y2 = np.where(alive, y2, self.y20)
            if trace is not None:
                trace["x"].append(x.copy())
                trace["y1"].append(y1.copy())
                trace["y2"].append(y2.copy())

        y1c, y2c = self._floor(y1, model.slow), self._floor(y2, model.fast)
        with np.errstate(invalid="ignore", divide="ignore"):
            deviations = np.asarray(self.value_fn.value(self.horizon, x, y1c, y2c), dtype=float) - self.start_value
        alive &= np.isfinite(deviations)
        return {"deviations": deviations, "excluded": ~alive, "x": x, "y1": y1, "y2": y2, "trace": trace}


def _block_sizes(n_paths: int, antithetic: bool) -> List[int]:
    sizes = [BLOCK_SIZE] * (n_paths // BLOCK_SIZE)
    if n_paths % BLOCK_SIZE:
        sizes.append(n_paths % BLOCK_SIZE)
    if antithetic and any(size % 2 for size in sizes):
        raise InvalidModelError("antithetic sampling needs an even number of paths")
    return sizes


def _martingale_stats(deviations: np.ndarray, excluded: np.ndarray, antithetic: bool) -> Tuple[float, float]:
    if antithetic:
        # pair i with its mirror inside the same block
        kept = []
        start = 0
        for size in _block_sizes(deviations.size, True):
            half = size // 2
            block = deviations[start:start + size]
            mask = ~excluded[start:start + size]
            both = mask[:half] & mask[half:]
            kept.append(0.5 * (block[:half][both] + block[half:][both]))
            start += size
        samples = np.concatenate(kept)
    else:
        samples = deviations[~excluded]
    n = samples.size
    if n < 2:
        raise NumericError("fewer than two usable paths; cannot estimate the martingale deviation")
    mean = math.fsum(samples) / n
    variance = math.fsum((samples - mean) ** 2) / (n - 1)
    return mean, math.sqrt(variance / n)


def simulate_paths(model: MarketModel, portfolio_fn: Callable, x0: float, y10: float, y20: float,
                   horizon: float, dt: float, n_paths: int, seed: int, value_fn=None,
                   delta: float = 0.0, epsilon: float = 0.0, antithetic: bool = False,
                   threads: int = 1, keep_paths: bool = False) -> Tuple[PathEnsemble, DriftReport]:
    """
    Euler-Maruyama paths of (X, Y1, Y2) under a vectorized feedback portfolio.

    Square-root states are fully truncated at the factor floor when coefficients
    are evaluated. Paths leaving |state| <= 1e8 or turning non-finite are
    excluded and counted. With a value function, the report carries the mean
    and standard error of V(horizon, X, Y) - V(0, x0, y0).
    """
    if horizon <= 0.0 or dt <= 0.0 or n_paths < 2:
        raise InvalidModelError("simulation needs horizon > 0, dt > 0 and at least two paths")
    if not model.fast.is_frozen:
        if epsilon <= 0.0:
            raise InvalidModelError("an active fast factor needs epsilon > 0")
        if dt > epsilon / FAST_STEP_RATIO:
            raise InvalidModelError(f"dt={dt} does not resolve the fast scale: need dt <= epsilon/{FAST_STEP_RATIO:g}")
    if not model.slow.is_frozen and delta < 0.0:
        raise InvalidModelError("delta must be non-negative")

    cholesky = model.cholesky()
    n_steps = int(round(horizon / dt))
    sizes = _block_sizes(n_paths, antithetic)
    if keep_paths and (n_steps + 1) * n_paths * 3 > PATH_DUMP_WARN:
        logger.warning("per-path dump holds %d values; expect a large file", (n_steps + 1) * n_paths * 3)

    start_value = 0.0 if value_fn is None else float(value_fn.value(0.0, x0, y10, y20))
    sim = _Simulation(
        model=model, portfolio_fn=portfolio_fn, value_fn=value_fn or _ZeroValue(),
        x0=x0, y10=y10 if not model.slow.is_frozen else model.slow.frozen_at,
        y20=y20 if not model.fast.is_frozen else model.fast.frozen_at,
        horizon=n_steps * dt, dt=dt, n_steps=n_steps, delta=delta, epsilon=epsilon,
        antithetic=antithetic, keep_paths=keep_paths, cholesky=cholesky, start_value=start_value,
    )
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    if threads <= 1:
        blocks = [sim.run_block(s, n) for s, n in zip(seeds, sizes)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            blocks = list(pool.map(sim.run_block, seeds, sizes))

    def gather(key: str) -> np.ndarray:
        return np.concatenate([b[key] for b in blocks])

    paths = None
    if keep_paths:
        paths = {f"path_{name}": np.concatenate([np.stack(b["trace"][name]) for b in blocks], axis=1)
                 for name in ("x", "y1", "y2")}
    ensemble = PathEnsemble(deviations=gather("deviations"), excluded=gather("excluded"),
                            terminal_x=gather("x"), terminal_y1=gather("y1"), terminal_y2=gather("y2"),
                            paths=paths)
    if ensemble.n_excluded:
        logger.warning("%d of %d paths excluded (non-finite or |state| > %.0e)",
                       ensemble.n_excluded, n_paths, EXPLOSION_BOUND)

    report = DriftReport()
    if value_fn is not None:
        mean, se = _martingale_stats(ensemble.deviations, ensemble.excluded, antithetic)
        report = DriftReport(mc=MartingaleStats(
            mean_deviation=mean, standard_error=se, n_paths=n_paths, n_excluded=ensemble.n_excluded,
            dt=dt, horizon=sim.horizon, rng_seed=seed, antithetic=antithetic,
        ))
    return ensemble, report


class _ZeroValue:
    def value(self, t, x, y1, y2):
        return np.zeros_like(np.asarray(x, dtype=float))
