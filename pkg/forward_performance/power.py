# -*- coding: utf-8 -*-
"""
Closed-form power-utility benchmark

With lambda(y) = Lambda sqrt(y) and a CIR factor

    dY = delta (m - Y) dt + sqrt(delta) beta sqrt(Y) dB,   d<W, B> = rho dt,

the distortion g = Psi^q linearizes the HJB equation and the value function is

    V(t, x, y) = gamma^gamma x^(1-gamma) / (1-gamma) exp(q (A1(t) y + A2(t)))

where A1' = -f(A1), A2' = -delta m A1 and
f(a) = delta beta^2 a^2 / 2 + (sqrt(delta) Gamma beta Lambda.rho - delta) a + c,
c = Gamma ||Lambda||^2 / (2q).

The module also holds the market models matching the benchmarks and the
convergence-rate studies that compare them against the expansion.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import InvalidModelError, RegimeError
from .expansion import ValueSurface, approx_value, v0_eval, v01_eval, v10_eval
from .factors import FastFactor, MarketModel, SlowFactor, sqrt_sharpe
from .models import (
    Branch,
    MultiscaleRow,
    MultiscaleStudy,
    PowerModelParams,
    RateStudy,
    Regime,
    StudyRow,
)
from .widder import InitialUtility, WidderMeasure

logger = logging.getLogger(__name__)


ERROR_FLOOR = 1e-13
FLOOR_MARGIN = 10.0
MIN_STUDY_POINTS = 4
FROZEN_STATE = 1.0
TINY_SCALE = 1e-8


# ============ Riccati System ============

@dataclass(frozen=True)
class RiccatiSolution:
    """
    Exact solution of A1' = -f(A1), A2' = -delta m A1 with A1(0) = A2(0) = 0.

    The transient branch converges monotonically to a_plus, the attracting
    root; the stationary branch sits on the root closest to zero.
    """
    a_minus: float
    a_plus: float
    discriminant_root: float
    regime: Regime
    delta: float
    m0: float
    k: float
    b: float
    c: float
    branch: Branch = Branch.TRANSIENT

    @property
    def stationary_root(self) -> float:
        return self.a_minus if abs(self.a_minus) < abs(self.a_plus) else self.a_plus

    def rhs(self, a):
        return self.k * a * a + self.b * a + self.c

    def A1(self, t):
        t = np.asarray(t, dtype=float)
        if self.regime is Regime.TRIVIAL:
            return np.zeros_like(t)
        if self.branch is Branch.STATIONARY:
            return np.full_like(t, self.stationary_root)
        a = self.a_plus
        if self.discriminant_root == 0.0:
            return a * a * self.k * t / (a * self.k * t - 1.0)
        growth = -np.expm1(-self.discriminant_root * t)
        r = a / self.a_minus
        return a * growth / (1.0 - r * (1.0 - growth))

    def A2(self, t):
        t = np.asarray(t, dtype=float)
        if self.regime is Regime.TRIVIAL:
            return np.zeros_like(t)
        if self.branch is Branch.STATIONARY:
            return -self.delta * self.m0 * self.stationary_root * t
        a = self.a_plus
        if self.discriminant_root == 0.0:
            return -self.delta * self.m0 * (a * t + np.log1p(-a * self.k * t) / self.k)
        r = a / self.a_minus
        growth = -np.expm1(-self.discriminant_root * t)
        return -self.delta * self.m0 * (a * t + np.log1p(r * growth / (1.0 - r)) / self.k)

    def A1_prime(self, t):
        return -self.rhs(self.A1(t))

    def A2_prime(self, t):
        return -self.delta * self.m0 * self.A1(t)


def riccati_coefficients(p: PowerModelParams) -> Tuple[float, float, float]:
    """(k, b, c) of f(a) = k a^2 + b a + c"""
    k = 0.5 * p.delta * p.beta ** 2
    b = math.sqrt(p.delta) * p.Gamma * p.beta * p.lambda_rho - p.delta
    c = p.Gamma * p.lambda_sq / (2.0 * p.q)
    return k, b, c


def _roots(k: float, b: float, c: float, case: Regime) -> Tuple[float, float, float]:
    """Real roots by the cancellation-free quadratic formula, plus sqrt(discriminant)"""
    disc = b * b - 4.0 * k * c
    if disc < 0.0:
        raise RegimeError(f"Riccati roots are complex (discriminant {disc:.3e})", failed_case=case.value)
    root = math.sqrt(disc)
    pivot = -0.5 * (b + math.copysign(root, b))
    first = pivot / k
    second = c / pivot if pivot != 0.0 else -b / k - first
    low, high = sorted((first, second))
    return low, high, root


def _classify(p: PowerModelParams) -> Regime:
    if p.lambda_sq == 0.0:
        return Regime.TRIVIAL
    if p.gamma_ra > 1.0:
        if p.q <= 0.0:
            raise RegimeError("gamma_ra > 1 requires q > 0", failed_case=Regime.RISK_AVERSE.value)
        return Regime.RISK_AVERSE
    return Regime.RISK_TOLERANT


def riccati_solve(p: PowerModelParams) -> RiccatiSolution:
    """Transient Riccati solution with A1(0) = A2(0) = 0"""
    regime = _classify(p)
    k, b, c = riccati_coefficients(p)
    if regime is Regime.TRIVIAL:
        return RiccatiSolution(a_minus=0.0, a_plus=0.0, discriminant_root=abs(b), regime=regime,
                               delta=p.delta, m0=p.m0, k=k, b=b, c=c)
    a_minus, a_plus, root = _roots(k, b, c, regime)
    if regime is Regime.RISK_TOLERANT and not a_plus < 0.0:
        raise RegimeError(
            "risk-tolerant regime needs both Riccati roots negative "
            "(Gamma beta Lambda.rho > sqrt(delta) + beta sqrt(Gamma ||Lambda||^2 / q)); A1 blows up otherwise",
            failed_case=regime.value,
        )
    logger.debug("Riccati roots %.6g, %.6g in the %s regime", a_minus, a_plus, regime.value)
    return RiccatiSolution(a_minus=a_minus, a_plus=a_plus, discriminant_root=root, regime=regime,
                           delta=p.delta, m0=p.m0, k=k, b=b, c=c)


def riccati_stationary(p: PowerModelParams) -> RiccatiSolution:
    """Stationary branch: A1 frozen at the root closest to zero, A2 linear in t"""
    regime = _classify(p)
    k, b, c = riccati_coefficients(p)
    if regime is Regime.TRIVIAL:
        return RiccatiSolution(a_minus=0.0, a_plus=0.0, discriminant_root=abs(b), regime=regime,
                               delta=p.delta, m0=p.m0, k=k, b=b, c=c, branch=Branch.STATIONARY)
    a_minus, a_plus, root = _roots(k, b, c, regime)
    return RiccatiSolution(a_minus=a_minus, a_plus=a_plus, discriminant_root=root, regime=regime,
                           delta=p.delta, m0=p.m0, k=k, b=b, c=c, branch=Branch.STATIONARY)


# ============ Exact Value ============

@dataclass(frozen=True)
class PowerPartials:
    """Analytic partial derivatives of the exact value; array-valued when the state is"""
    value: np.ndarray
    v_t: np.ndarray
    v_x: np.ndarray
    v_xx: np.ndarray
    v_y: np.ndarray
    v_yy: np.ndarray
    v_xy: np.ndarray


def _datum(gamma_ra: float, x):
    return gamma_ra ** gamma_ra * np.power(x, 1.0 - gamma_ra) / (1.0 - gamma_ra)


def exact_value(p: PowerModelParams, t, x, y, solution: Optional[RiccatiSolution] = None):
    """gamma^gamma x^(1-gamma) / (1-gamma) exp(q (A1(t) y + A2(t)))"""
    solution = solution or riccati_solve(p)
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise InvalidModelError("wealth must be positive for the power benchmark")
    value = _datum(p.gamma_ra, x) * np.exp(p.q * (solution.A1(t) * y + solution.A2(t)))
    return float(value) if np.ndim(value) == 0 else value


def exact_partials(p: PowerModelParams, t, x, y, solution: Optional[RiccatiSolution] = None) -> PowerPartials:
    solution = solution or riccati_solve(p)
    gamma_ra, q = p.gamma_ra, p.q
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    a1 = solution.A1(t)
    growth = np.exp(q * (a1 * y + solution.A2(t)))
    datum = _datum(gamma_ra, x)
    v_x = gamma_ra ** gamma_ra * np.power(x, -gamma_ra) * growth
    return PowerPartials(
        value=datum * growth,
        v_t=datum * q * (solution.A1_prime(t) * y + solution.A2_prime(t)) * growth,
        v_x=v_x,
        v_xx=-gamma_ra ** (gamma_ra + 1.0) * np.power(x, -gamma_ra - 1.0) * growth,
        v_y=datum * q * a1 * growth,
        v_yy=datum * (q * a1) ** 2 * growth,
        v_xy=v_x * q * a1,
    )


def exact_optimizer(p: PowerModelParams, t, x, y, solution: Optional[RiccatiSolution] = None) -> np.ndarray:
    """
    Exact optimal exposure -(lambda V_x + sqrt(delta) kappa rho V_xy) / V_xx.

    With the benchmark's identity volatility this is also the portfolio.
    Scalar states give shape (d,), arrays of states give (..., d).
    """
    partials = exact_partials(p, t, x, y, solution)
    root_y = np.sqrt(np.asarray(y, dtype=float))[..., None]
    lam = np.asarray(p.Lambda) * root_y
    kappa = p.beta * root_y
    rho = np.asarray(p.rho)
    numerator = lam * partials.v_x[..., None] + math.sqrt(p.delta) * kappa * rho * partials.v_xy[..., None]
    return -numerator / partials.v_xx[..., None]


def hjb_terms(p: PowerModelParams, t: float, x: float, y: float,
              solution: Optional[RiccatiSolution] = None) -> Dict[str, float]:
    """Individual terms of the single-factor HJB equation; they sum to zero at the exact value"""
    solution = solution or riccati_solve(p)
    d = exact_partials(p, t, x, y, solution)
    lam = np.asarray(p.Lambda) * math.sqrt(y)
    hedge = math.sqrt(p.delta) * p.beta * math.sqrt(y) * np.asarray(p.rho)
    combined = lam * float(d.v_x) + hedge * float(d.v_xy)
    return {
        "v_t": float(d.v_t),
        "drift": p.delta * (p.m0 - y) * float(d.v_y),
        "diffusion": 0.5 * p.delta * p.beta ** 2 * y * float(d.v_yy),
        "control": -0.5 * float(combined @ combined) / float(d.v_xx),
    }


def hjb_residual(p: PowerModelParams, t: float, x: float, y: float,
                 solution: Optional[RiccatiSolution] = None) -> float:
    """Relative residual |sum of terms| / sum of |terms|"""
    terms = hjb_terms(p, t, x, y, solution)
    scale = math.fsum(abs(v) for v in terms.values())
    return abs(math.fsum(terms.values())) / scale if scale > 0.0 else 0.0


# ============ Benchmark Market Models ============

def _power_utility(gamma_ra: float) -> Tuple[WidderMeasure, InitialUtility]:
    return WidderMeasure.power(gamma_ra), InitialUtility.power(gamma_ra)


def power_market_model(p: PowerModelParams) -> MarketModel:
    """Slow-only benchmark: the fast factor is frozen and lambda = Lambda sqrt(y1)"""
    d = len(p.Lambda)
    sharpe, dsharpe = sqrt_sharpe(p.Lambda, np.zeros(d))
    widder, v0 = _power_utility(p.gamma_ra)
    return MarketModel(
        lambda_fn=sharpe, dlambda_dy1=dsharpe, sigma_fn=lambda y1, y2: np.eye(d),
        rho_s=p.rho, rho_f=np.zeros(d), rho_sf=0.0,
        slow=SlowFactor.cir(p.m0, p.beta), fast=FastFactor.frozen(FROZEN_STATE),
        widder=widder, v0=v0, name="cir-power",
    )


def fast_market_model(p: PowerModelParams) -> MarketModel:
    """Fast-only benchmark: the slow factor is frozen and lambda = Lambda sqrt(y2)"""
    d = len(p.Lambda)
    sharpe, dsharpe = sqrt_sharpe(np.zeros(d), p.Lambda)
    widder, v0 = _power_utility(p.gamma_ra)
    return MarketModel(
        lambda_fn=sharpe, dlambda_dy1=dsharpe, sigma_fn=lambda y1, y2: np.eye(d),
        rho_s=np.zeros(d), rho_f=p.rho, rho_sf=0.0,
        slow=SlowFactor.frozen(FROZEN_STATE), fast=FastFactor.cir(p.m0, p.beta),
        widder=widder, v0=v0, name="cir-fast",
    )


@dataclass(frozen=True)
class SeparableBenchmark:
    """
    Two-asset market where asset 1 loads on the slow factor and asset 2 on the
    fast one: lambda = (Lambda_s sqrt(y1), Lambda_f sqrt(y2)), sigma = I,
    rho_s = (rho_s, 0), rho_f = (0, rho_f), rho_sf = 0.

    The product of the slow transient solution and the fast stationary one
    solves the two-factor HJB equation exactly.
    """
    slow: PowerModelParams
    fast: PowerModelParams

    def __post_init__(self):
        if self.slow.gamma_ra != self.fast.gamma_ra:
            raise InvalidModelError("both factors of the separable benchmark must share gamma_ra")
        if len(self.slow.Lambda) != 1 or len(self.fast.Lambda) != 1:
            raise InvalidModelError("the separable benchmark loads one asset on each factor")

    @property
    def gamma_ra(self) -> float:
        return self.slow.gamma_ra

    def solutions(self, delta: float, epsilon: float) -> Tuple[RiccatiSolution, RiccatiSolution]:
        return (riccati_solve(self.slow.with_delta(delta)),
                riccati_stationary(self.fast.with_delta(1.0 / epsilon)))

    def value(self, t, x, y1, y2, delta: float, epsilon: float):
        slow_sol, fast_sol = self.solutions(delta, epsilon)
        growth = self.slow.q * (slow_sol.A1(t) * y1 + slow_sol.A2(t))
        growth = growth + self.fast.q * (fast_sol.A1(t) * y2 + fast_sol.A2(t))
        value = _datum(self.gamma_ra, np.asarray(x, dtype=float)) * np.exp(growth)
        return float(value) if np.ndim(value) == 0 else value

    def market_model(self) -> MarketModel:
        sharpe, dsharpe = sqrt_sharpe([self.slow.Lambda[0], 0.0], [0.0, self.fast.Lambda[0]])
        widder, v0 = _power_utility(self.gamma_ra)
        return MarketModel(
            lambda_fn=sharpe, dlambda_dy1=dsharpe, sigma_fn=lambda y1, y2: np.eye(2),
            rho_s=[self.slow.rho[0], 0.0], rho_f=[0.0, self.fast.rho[0]], rho_sf=0.0,
            slow=SlowFactor.cir(self.slow.m0, self.slow.beta),
            fast=FastFactor.cir(self.fast.m0, self.fast.beta),
            widder=widder, v0=v0, name="cir-multiscale",
        )


def separable_market_model(p_slow: PowerModelParams, p_fast: PowerModelParams) -> MarketModel:
    return SeparableBenchmark(p_slow, p_fast).market_model()


# ============ Rate Studies ============

def _fit_slope(parameters: Sequence[float], errors: Sequence[float]) -> Optional[float]:
    if len(parameters) < 2:
        return None
    slope, _ = np.polyfit(np.log(parameters), np.log(errors), 1)
    return float(slope)


def _check_grid(grid: Sequence[float]) -> List[float]:
    values = sorted(float(v) for v in grid)
    if len(values) < MIN_STUDY_POINTS:
        logger.warning("rate study with %d points; at least %d are recommended", len(values), MIN_STUDY_POINTS)
    if values[0] <= 0.0:
        raise InvalidModelError("study parameters must be positive")
    if values[-1] / values[0] < 100.0:
        logger.warning("study grid spans less than two decades")
    return values


def _map(fn, items, threads: int) -> list:
    if threads <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _rate_rows(grid: Sequence[float], exact, v0: float, correction: float) -> Tuple[List[StudyRow], List[float]]:
    rows, dropped = [], []
    threshold = FLOOR_MARGIN * ERROR_FLOOR
    for parameter, reference in zip(grid, exact):
        one_term = v0
        two_term = v0 + math.sqrt(parameter) * correction
        error_one, error_two = abs(reference - one_term), abs(reference - two_term)
        retained = error_two > threshold and error_one > threshold
        if not retained:
            logger.warning("dropping study point %.3g: error within %.0fx of the %.0e floor",
                           parameter, FLOOR_MARGIN, ERROR_FLOOR)
            dropped.append(parameter)
        rows.append(StudyRow(parameter=parameter, exact=reference, one_term=one_term, two_term=two_term,
                             error_one_term=error_one, error_two_term=error_two, retained=retained))
    return rows, dropped


def _slopes(rows: List[StudyRow]) -> Tuple[Optional[float], Optional[float]]:
    kept = [r for r in rows if r.retained]
    params = [r.parameter for r in kept]
    return (_fit_slope(params, [r.error_two_term for r in kept]),
            _fit_slope(params, [r.error_one_term for r in kept]))


def error_study(p: PowerModelParams, deltas: Sequence[float], t: float, x: float, y: float,
                threads: int = 1) -> RateStudy:
    """Slow-factor rates: fit log|V - V0 - sqrt(delta) V1| and log|V - V0| against log delta"""
    grid = _check_grid(deltas)
    surface = ValueSurface(power_market_model(p))
    v0, _ = v0_eval(surface, t, x, y)
    v1 = v10_eval(surface, t, x, y)
    exact = _map(lambda delta: exact_value(p.with_delta(delta), t, x, y), grid, threads)
    rows, dropped = _rate_rows(grid, exact, v0, v1)
    two_term, one_term = _slopes(rows)
    logger.info("slow study: two-term slope %s, one-term slope %s", two_term, one_term)
    return RateStudy(kind="slow", t=t, x=x, y=y, rows=rows, two_term_slope=two_term,
                     one_term_slope=one_term, dropped=dropped,
                     lambda_bar_sq=surface.coefficients(y).lambda_bar ** 2)


def fast_exact_value(p: PowerModelParams, epsilon: float, t, x, y):
    """Exact value of the reparametrized benchmark delta = 1/epsilon on its stationary branch"""
    fast = p.with_delta(1.0 / epsilon)
    return exact_value(fast, t, x, y, riccati_stationary(fast))


def fast_reparam_study(p: PowerModelParams, epsilons: Sequence[float], t: float, x: float, y: float,
                       threads: int = 1) -> RateStudy:
    """Fast-factor rates against the exact solution reparametrized with delta = 1/epsilon"""
    grid = _check_grid(epsilons)
    surface = ValueSurface(fast_market_model(p))
    v0, _ = v0_eval(surface, t, x, y)
    v1 = v01_eval(surface, t, x, y)
    exact = _map(lambda eps: fast_exact_value(p, eps, t, x, y), grid, threads)
    rows, dropped = _rate_rows(grid, exact, v0, v1)
    two_term, one_term = _slopes(rows)
    logger.info("fast study: two-term slope %s, one-term slope %s", two_term, one_term)
    return RateStudy(kind="fast", t=t, x=x, y=y, rows=rows, two_term_slope=two_term,
                     one_term_slope=one_term, dropped=dropped,
                     lambda_bar_sq=surface.coefficients(FROZEN_STATE).lambda_bar ** 2)


def _multiscale_rows(surface: ValueSurface, pairs: Sequence[Tuple[float, float]], t: float, x: float,
                     y1: float, y2: float, benchmark: Optional[SeparableBenchmark],
                     threads: int) -> List[MultiscaleRow]:
    def row(pair: Tuple[float, float]) -> MultiscaleRow:
        delta, epsilon = pair
        approx = approx_value(surface, t, x, y1, y2, delta, epsilon).combined
        if benchmark is None:
            return MultiscaleRow(delta=delta, epsilon=epsilon, approx=approx)
        exact = benchmark.value(t, x, y1, y2, delta, epsilon)
        error = abs(exact - approx)
        return MultiscaleRow(delta=delta, epsilon=epsilon, approx=approx, exact=exact, error=error,
                             ratio=error / (delta + epsilon))

    return _map(row, pairs, threads)


def _spread(values: Sequence[float]) -> float:
    values = [v for v in values if v > 0.0]
    return max(values) / min(values) if values else math.nan


def _fit_above_floor(parameters: Sequence[float], errors: Sequence[Optional[float]]) -> Optional[float]:
    """Slope fit that drops errors within FLOOR_MARGIN of the error floor, as the rate rows do"""
    threshold = FLOOR_MARGIN * ERROR_FLOOR
    kept = [(p, e) for p, e in zip(parameters, errors) if e is not None and e > threshold]
    if len(kept) < len(parameters):
        logger.warning("dropping %d multiscale points within %.0fx of the %.0e floor",
                       len(parameters) - len(kept), FLOOR_MARGIN, ERROR_FLOOR)
    return _fit_slope([p for p, _ in kept], [e for _, e in kept])


def multiscale_study(p_slow: PowerModelParams, p_fast: PowerModelParams,
                     pairs: Sequence[Tuple[float, float]], t: float, x: float, y1: float, y2: float,
                     threads: int = 1, tiny: float = TINY_SCALE) -> MultiscaleStudy:
    """
    Error table over (delta, epsilon) against the separable two-factor benchmark.

    Property checks: the delta slope with epsilon tiny, the epsilon slope with
    delta tiny, the spread of error/(2 delta) on the diagonal, and the growth
    of error/(delta+epsilon) over the grid relative to the coarsest diagonal
    point. The full-grid max/min spread is reported too; it moves between the
    slow and fast error constants, so it is not a rate check.
    """
    benchmark = SeparableBenchmark(p_slow, p_fast)
    surface = ValueSurface(benchmark.market_model())
    rows = _multiscale_rows(surface, pairs, t, x, y1, y2, benchmark, threads)

    scales = sorted({v for pair in pairs for v in pair})
    checks: Dict[str, float] = {"ratio_spread": _spread([r.ratio for r in rows])}
    if len(scales) >= 2:
        along_delta = _multiscale_rows(surface, [(s, tiny) for s in scales], t, x, y1, y2, benchmark, threads)
        along_eps = _multiscale_rows(surface, [(tiny, s) for s in scales], t, x, y1, y2, benchmark, threads)
        diagonal = _multiscale_rows(surface, [(s, s) for s in scales], t, x, y1, y2, benchmark, threads)
        checks["delta_slope"] = _fit_above_floor(scales, [r.error for r in along_delta])
        checks["epsilon_slope"] = _fit_above_floor(scales, [r.error for r in along_eps])
        checks["diagonal_ratio_spread"] = _spread([r.ratio for r in diagonal])
        coarsest = diagonal[-1].ratio
        if coarsest:
            checks["ratio_growth"] = max(r.ratio for r in rows) / coarsest
    logger.info("multiscale study: %s", checks)
    return MultiscaleStudy(oracle="separable-exact", rows=rows, property_checks=checks)


def multiscale_properties(surface: ValueSurface, pairs: Sequence[Tuple[float, float]], t: float, x: float,
                          y1: float, y2: float, threads: int = 1) -> MultiscaleStudy:
    """
    Rate table for a model without an exact reference.

    Only properties are checked: the approximation stays increasing and
    concave in x and is linear in sqrt(delta) and sqrt(epsilon).
    """
    rows = _multiscale_rows(surface, pairs, t, x, y1, y2, None, threads)
    h = 1e-3 * x
    concave = True
    for delta, epsilon in pairs:
        left, mid, right = (approx_value(surface, t, z, y1, y2, delta, epsilon).combined
                            for z in (x - h, x, x + h))
        concave = concave and left < mid < right and (right - mid) < (mid - left)
    return MultiscaleStudy(oracle="none", rows=rows,
                           property_checks={"increasing_concave": float(concave)})
