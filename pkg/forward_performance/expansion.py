# -*- coding: utf-8 -*-
"""
Multiscale expansion of the forward performance value function

    V ~ V0 + sqrt(delta) V10 + sqrt(epsilon) V01

V0(t, x, y1) = u(lambda_bar^2(y1) t, x) is the time-monotone value run on the
averaged clock. Every correction is a scalar multiple of composites of the x-
derivatives of u, which are taken from derivative jets rather than nested
finite differences:

    P = V_x^2 / V_xx,   R = V_x / V_xx,   K = R P_x

    V_y1  = t lambda_bar lambda_bar' P        (at fixed x)
    V_xy1 = t lambda_bar lambda_bar' P_x
    V10   = (t/2) C10 V_x V_xy1 / V_xx = (t^2/2) C10 lambda_bar lambda_bar' K
    V01   = -(t/2) C01 K
    V2    = -phi P / 2

A degenerate single-factor model is the full model with one factor frozen, so
the slow-only and fast-only reductions run through this same code.
"""

import logging
import math
import threading
from collections import OrderedDict
from dataclasses import dataclass
from typing import Generic, Hashable, Optional, Tuple, TypeVar

import numpy as np

from .errors import ConcavityError, InvalidModelError
from .factors import MarketModel, averaged_coefficients, phi
from .jets import Jet
from .models import (
    AveragedCoefficients,
    CoordinateChange,
    DerivativeStack,
    ExpansionResult,
    NaturalParametrizationReport,
)
from .widder import QUAD_TOL, h_eval, h_inverse, u_eval, u_jet

logger = logging.getLogger(__name__)


DEFAULT_N_QUAD = 16
MAX_CACHED_POINTS = 4096
MAX_CACHED_COEFFICIENTS = 512

T = TypeVar("T")


class BoundedCache(Generic[T]):
    """Thread-safe mapping that drops the least recently used entry beyond `maxsize`"""

    def __init__(self, maxsize: int):
        if maxsize < 1:
            raise ValueError("cache size must be at least 1")
        self.maxsize = maxsize
        self._data: "OrderedDict[Hashable, T]" = OrderedDict()
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._data)

    def __contains__(self, key: Hashable) -> bool:
        return key in self._data

    def get(self, key: Hashable) -> Optional[T]:
        with self._lock:
            value = self._data.get(key)
            if value is not None:
                self._data.move_to_end(key)
            return value

    def put(self, key: Hashable, value: T) -> None:
        with self._lock:
            self._data[key] = value
            self._data.move_to_end(key)
            while len(self._data) > self.maxsize:
                self._data.popitem(last=False)


@dataclass(frozen=True)
class SurfacePoint:
    """Jets of V0 and of the correction shapes at one (t, x, y1)"""
    coefficients: AveragedCoefficients
    tau: float
    marginal: Jet       # V_x, V_xx, ..., fifth derivative
    curvature: Jet      # P and its first three x-derivatives
    shape: Jet          # K and its first two x-derivatives

    @property
    def v_x(self) -> float:
        return self.marginal[0]

    @property
    def v_xx(self) -> float:
        return self.marginal[1]

    @property
    def slope_factor(self) -> float:
        """lambda_bar lambda_bar'"""
        return self.coefficients.lambda_bar * self.coefficients.lambda_bar_prime


class ValueSurface:
    """
    Leading-order surface of a market model plus its correction terms.

    Evaluations are cached by (t, x, y1) in bounded LRU caches shared across
    threads; a lost race or an eviction recomputes the same value, so caching
    never changes results.
    """

    def __init__(self, model: MarketModel, tol: float = QUAD_TOL, max_points: int = MAX_CACHED_POINTS):
        self.model = model
        self.tol = tol
        self._coefficients: BoundedCache[AveragedCoefficients] = BoundedCache(MAX_CACHED_COEFFICIENTS)
        self._points: BoundedCache[SurfacePoint] = BoundedCache(max_points)
        self._values: BoundedCache[float] = BoundedCache(max_points)

    @property
    def cache_size(self) -> int:
        return len(self._coefficients) + len(self._points) + len(self._values)

    def __repr__(self) -> str:
        return f"ValueSurface(model={self.model.name!r}, cached_points={len(self._points)})"

    # ============ State Handling ============

    def slow_state(self, y1: float) -> float:
        """A frozen slow factor pins y1 to its frozen value"""
        return float(self.model.slow.frozen_at) if self.model.slow.is_frozen else float(y1)

    def fast_state(self, y2: float) -> float:
        return float(self.model.fast.frozen_at) if self.model.fast.is_frozen else float(y2)

    def coefficients(self, y1: float) -> AveragedCoefficients:
        y1 = self.slow_state(y1)
        cached = self._coefficients.get(y1)
        if cached is None:
            cached = averaged_coefficients(self.model, y1)
            self._coefficients.put(y1, cached)
        return cached

    def clock(self, t: float, y1: float) -> float:
        """Averaged clock tau = lambda_bar^2(y1) t"""
        return self.coefficients(y1).lambda_bar ** 2 * t

    def point(self, t: float, x: float, y1: float) -> SurfacePoint:
        y1 = self.slow_state(y1)
        key = (float(t), float(x), y1)
        cached = self._points.get(key)
        if cached is not None:
            return cached

        coefficients = self.coefficients(y1)
        tau = coefficients.lambda_bar ** 2 * t
        marginal = u_jet(self.model.widder, self.model.v0, tau, x, include_value=False, tol=self.tol).derivative()
        if not marginal[0] > 0.0:
            raise ConcavityError(f"V0_x must be positive, got {marginal[0]:.6g} at t={t}, x={x}")
        if not marginal[1] < 0.0:
            raise ConcavityError(f"V0_xx must be negative, got {marginal[1]:.6g} at t={t}, x={x}")
        second = marginal.derivative()
        curvature = marginal * marginal / second
        shape = (marginal / second) * curvature.derivative()
        point = SurfacePoint(coefficients=coefficients, tau=tau, marginal=marginal,
                             curvature=curvature, shape=shape)
        self._points.put(key, point)
        return point

    def value(self, t: float, x: float, y1: float) -> float:
        y1 = self.slow_state(y1)
        key = (float(t), float(x), y1)
        cached = self._values.get(key)
        if cached is None:
            cached = u_eval(self.model.widder, self.model.v0, self.clock(t, y1), x, self.tol)
            self._values.put(key, cached)
        return cached

    # ============ Correction Jets ============

    def v10_jet(self, t: float, x: float, y1: float) -> Jet:
        """V10 and its first two x-derivatives"""
        point = self.point(t, x, y1)
        scale = 0.5 * t * t * point.coefficients.c10 * point.slope_factor
        return point.shape * scale

    def v01_jet(self, t: float, x: float, y1: float) -> Jet:
        """V01 and its first two x-derivatives"""
        point = self.point(t, x, y1)
        return point.shape * (-0.5 * t * point.coefficients.c01)


# ============ Leading Order ============

def v0_eval(s: ValueSurface, t: float, x: float, y1: float) -> Tuple[float, DerivativeStack]:
    """V0 = u(lambda_bar^2(y1) t, x) with its x-derivative stack"""
    point = s.point(t, x, y1)
    value = s.value(t, x, y1)
    return value, DerivativeStack.from_sequence([value, *point.marginal.c[:4]], 4)


def v0_cross_derivatives(s: ValueSurface, t: float, x: float, y1: float) -> Tuple[float, float]:
    """(V0_y1, V0_xy1), both taken at fixed x"""
    point = s.point(t, x, y1)
    scale = t * point.slope_factor
    return scale * point.curvature[0], scale * point.curvature[1]


# ============ Corrections ============

def v10_eval(s: ValueSurface, t: float, x: float, y1: float) -> float:
    """Slow correction (t/2) C10 V_x V_xy1 / V_xx"""
    point = s.point(t, x, y1)
    _, v_xy1 = v0_cross_derivatives(s, t, x, y1)
    return 0.5 * t * point.coefficients.c10 * point.v_x * v_xy1 / point.v_xx


def v01_eval(s: ValueSurface, t: float, x: float, y1: float) -> float:
    """Fast correction -(t/2) C01 (V_x / V_xx) (V_x^2 / V_xx)_x"""
    return s.v01_jet(t, x, y1)[0]


def v2_eval(s: ValueSurface, t: float, x: float, y1: float, y2: float) -> float:
    """Second-order fast term -phi V_x^2 / (2 V_xx), free constant fixed to zero"""
    point = s.point(t, x, y1)
    corrector = phi(s.model, s.slow_state(y1), s.fast_state(y2))
    return -0.5 * corrector * point.curvature[0]


# ============ Heat Coordinates ============

def xi_of(s: ValueSurface, t: float, x: float, y1: float) -> float:
    """xi = -log V0_x - lambda_bar^2 t / 2"""
    tau = s.clock(t, y1)
    return h_inverse(s.model.widder, tau, x, s.tol) - tau


def change_of_variables(s: ValueSurface, t: float, xi: float, y1: float) -> CoordinateChange:
    """Map a heat coordinate xi back to wealth and evaluate w0(t, xi) = V0(t, x)"""
    tau = s.clock(t, y1)
    x = h_eval(s.model.widder, tau, xi + tau, s.tol)
    if not x > s.model.v0.domain_lower:
        raise InvalidModelError(f"xi={xi} maps outside the wealth domain at t={t}")
    return CoordinateChange(xi=xi, x=x, w0=s.value(t, x, y1))


def w0_eval(s: ValueSurface, t: float, xi: float, y1: float) -> float:
    return change_of_variables(s, t, xi, y1).w0


def heat_grid(s: ValueSurface, t: float, y1: float, n: int = 21,
              x_lower: float = 0.1, x_upper: float = 10.0) -> np.ndarray:
    """Uniform xi grid over the image of a log-spaced wealth grid"""
    xs = np.geomspace(x_lower, x_upper, n)
    ends = [xi_of(s, t, x, y1) for x in (xs[0], xs[-1])]
    return np.linspace(ends[0], ends[1], n)


# ============ Natural Parametrization ============

def natural_parametrization_check(s: ValueSurface, t: float, x: float, y1: float,
                                  n_quad: int = DEFAULT_N_QUAD) -> NaturalParametrizationReport:
    """
    Consistency check of the time-integral representation of the corrections.

    The auxiliary integrands are s C10 lambda_bar lambda_bar' K (affine in s)
    and -C01 K / 2 (constant in s), so Gauss-Legendre quadrature on [0, t]
    reproduces the closed forms to rounding for any n_quad >= 1. A nonzero
    discrepancy means the jets behind K or the closed forms disagree.
    """
    point = s.point(t, x, y1)
    nodes, weights = np.polynomial.legendre.leggauss(n_quad)
    times = 0.5 * t * (nodes + 1.0)
    weights = 0.5 * t * weights

    k = point.shape[0]
    slow_rate = point.coefficients.c10 * point.slope_factor * k
    fast_rate = -0.5 * point.coefficients.c01 * k
    slow_quadrature = math.fsum(weights * times * slow_rate)
    fast_quadrature = math.fsum(weights * fast_rate)

    slow_closed = v10_eval(s, t, x, y1)
    fast_closed = v01_eval(s, t, x, y1)
    return NaturalParametrizationReport(
        slow_quadrature=slow_quadrature, slow_closed=slow_closed,
        slow_discrepancy=abs(slow_quadrature - slow_closed),
        fast_quadrature=fast_quadrature, fast_closed=fast_closed,
        fast_discrepancy=abs(fast_quadrature - fast_closed),
        n_quad=n_quad,
    )


# ============ Assembly ============

def approx_value(s: ValueSurface, t: float, x: float, y1: float, y2: float,
                 delta: float, epsilon: float) -> ExpansionResult:
    """
    V0 + sqrt(delta) V10 + sqrt(epsilon) V01.

    y2 only enters through the averaging, so the result does not depend on it.
    """
    if delta < 0.0 or epsilon < 0.0:
        raise InvalidModelError("delta and epsilon must be non-negative")
    v0, _ = v0_eval(s, t, x, y1)
    return ExpansionResult.assemble(v0=v0, v10=v10_eval(s, t, x, y1), v01=v01_eval(s, t, x, y1),
                                    delta=delta, epsilon=epsilon)
