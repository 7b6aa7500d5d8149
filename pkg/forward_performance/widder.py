# -*- coding: utf-8 -*-
"""
Widder representation and the time-monotone value function

h(t, x) = int (exp(z x - z^2 t / 2) - 1) / z  nu(dz) + C0 solves the
backward heat equation h_t + h_xx / 2 = 0. Its spatial inverse H = h^{-1}
generates the time-monotone surface

    u(t, x) = -1/2 int_0^t exp(-H(s, x) + s/2) h_x(s, H(s, x)) ds + V(0, x),

whose marginal is exact: u_x(t, x) = exp(-H(t, x) + t/2). Higher x-derivatives
follow from the inverse-function rule, so the derivative stack never needs
finite differences.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence, Tuple

from scipy.integrate import quad
from scipy.optimize import brentq

from .errors import InvalidModelError, NumericError, RangeError
from .jets import Jet
from .models import DerivativeStack

logger = logging.getLogger(__name__)


# ============ Numerical Constants ============

SERIES_CUTOFF = 1e-6           # |z| below this uses the series branch of the kernel
QUAD_TOL = 1e-10               # abs/rel tolerance of every time and measure quadrature
MAX_EVALUATIONS = 1_000_000    # integrand evaluations allowed per quadrature
QUAD_LIMIT = MAX_EVALUATIONS // 21
ROOT_XTOL = 1e-12
ROOT_RESIDUAL_TOL = 1e-9       # |h(t, x) - w| <= tol (1 + |w|) after inversion
MAX_DOUBLINGS = 200
DATUM_FD_STEP = 1e-4           # relative step of the datum finite-difference fallback
MAX_ORDER = 4                  # public derivative stacks
INTERNAL_ORDER = 5             # correction derivatives need one order more


DENSITY_FAMILIES = ("uniform", "triangular")


@dataclass(frozen=True)
class DensityFamily:
    """
    Parametric density on [lower, upper] carrying total mass `mass`.

    "triangular" is symmetric with its peak at the midpoint.
    """
    family: str
    lower: float
    upper: float
    mass: float = 1.0

    def __post_init__(self):
        if self.family not in DENSITY_FAMILIES:
            raise InvalidModelError(f"unknown density family {self.family!r}; expected one of {DENSITY_FAMILIES}")
        if not (math.isfinite(self.lower) and math.isfinite(self.upper) and self.lower < self.upper):
            raise InvalidModelError(f"density support must be a finite interval, got ({self.lower}, {self.upper})")
        if not self.mass > 0.0:
            raise InvalidModelError(f"density mass must be positive, got {self.mass}")

    @property
    def support(self) -> Tuple[float, float]:
        return self.lower, self.upper

    @property
    def breakpoints(self) -> Sequence[float]:
        return (0.5 * (self.lower + self.upper),) if self.family == "triangular" else ()

    def __call__(self, z: float) -> float:
        if not self.lower <= z <= self.upper:
            return 0.0
        width = self.upper - self.lower
        if self.family == "uniform":
            return self.mass / width
        half = 0.5 * width
        return self.mass / half * (1.0 - abs(z - self.lower - half) / half)


@dataclass(frozen=True, eq=False)
class WidderMeasure:
    """
    Finite atomic part plus an optional compactly supported density.

    `c0` is the additive constant of h; it may be omitted for a nonzero
    measure (taken as 0) but is required when the measure is empty.
    """
    atoms: Tuple[Tuple[float, float], ...] = ()
    density: Optional[Callable[[float], float]] = None
    support: Optional[Tuple[float, float]] = None
    c0: Optional[float] = None

    def __post_init__(self):
        atoms = tuple((float(z), float(w)) for z, w in self.atoms)
        object.__setattr__(self, "atoms", atoms)
        for z, w in atoms:
            if not w > 0.0:
                raise InvalidModelError(f"atom weight at z={z} must be strictly positive, got {w}")
        locations = [z for z, _ in atoms]
        if len(set(locations)) != len(locations):
            raise InvalidModelError("atom locations must be pairwise distinct")
        if self.density is not None:
            if self.support is None:
                raise InvalidModelError("a density needs compact support bounds")
            lo, hi = self.support
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise InvalidModelError(f"density support must be a finite interval, got {self.support}")
            if not self.total_mass() > 0.0:
                raise InvalidModelError("declared density has zero mass")

    @classmethod
    def power(cls, gamma_ra: float) -> "WidderMeasure":
        """Dirac mass at 1/gamma with unit weight and C0 = gamma: h = gamma exp(x/gamma - t/(2 gamma^2))"""
        return cls(atoms=((1.0 / gamma_ra, 1.0),), c0=gamma_ra)

    @property
    def is_zero(self) -> bool:
        return not self.atoms and self.density is None

    @property
    def constant(self) -> float:
        if self.c0 is None:
            if self.is_zero:
                raise InvalidModelError("empty Widder measure needs an explicit c0")
            return 0.0
        return float(self.c0)

    def total_mass(self) -> float:
        mass = math.fsum(w for _, w in self.atoms)
        if self.density is not None:
            lo, hi = self.support
            mass += _quad(self.density, lo, hi, QUAD_TOL, "density mass", _breakpoints(self))
        return mass

    def require_nonzero(self) -> None:
        if self.is_zero:
            raise InvalidModelError("h is constant for the zero measure and cannot be inverted")


@dataclass(frozen=True, eq=False)
class InitialUtility:
    """
    The datum V(0, x): increasing and strictly concave on (domain_lower, inf).

    `derivative(x, k)` is an optional analytic handle for the k-th derivative.
    """
    value_at: Callable[[float], float]
    domain_lower: float = 0.0
    derivative: Optional[Callable[[float, int], float]] = None

    def __call__(self, x: float) -> float:
        return self.value_at(x)

    @classmethod
    def power(cls, gamma_ra: float) -> "InitialUtility":
        scale = gamma_ra ** gamma_ra

        def value_at(x: float) -> float:
            return scale * x ** (1.0 - gamma_ra) / (1.0 - gamma_ra)

        def derivative(x: float, k: int) -> float:
            if k == 0:
                return value_at(x)
            coeff = scale
            for j in range(k - 1):
                coeff *= -gamma_ra - j
            return coeff * x ** (1.0 - gamma_ra - k)

        return cls(value_at=value_at, domain_lower=0.0, derivative=derivative)

    @classmethod
    def from_widder(cls, m: WidderMeasure, x_ref: float = 1.0, v_ref: float = 0.0,
                    domain_lower: float = 0.0) -> "InitialUtility":
        """Datum whose marginal is exp(-h^{-1}(0, x)), anchored at V(0, x_ref) = v_ref"""
        m.require_nonzero()

        def value_at(x: float) -> float:
            return v_ref + _quad(lambda s: math.exp(-h_inverse(m, 0.0, s)), x_ref, x,
                                 QUAD_TOL, "datum integral")

        def derivative(x: float, k: int) -> float:
            if k == 0:
                return value_at(x)
            return marginal_jet(m, 0.0, x, k - 1)[k - 1]

        return cls(value_at=value_at, domain_lower=domain_lower, derivative=derivative)

    def check_shape(self, xs: Iterable[float]) -> None:
        """Sampled monotonicity and concavity"""
        xs = sorted(xs)
        values = [self.value_at(x) for x in xs]
        for a, b in zip(values, values[1:]):
            if not b > a:
                raise InvalidModelError("initial utility is not strictly increasing on the sample grid")
        for (x0, a), (x1, b), (x2, c) in zip(zip(xs, values), zip(xs[1:], values[1:]), zip(xs[2:], values[2:])):
            slope_left = (b - a) / (x1 - x0)
            slope_right = (c - b) / (x2 - x1)
            if not slope_right < slope_left:
                raise InvalidModelError("initial utility is not strictly concave on the sample grid")


# ============ Quadrature Helpers ============

def _quad(fn: Callable[[float], float], lo: float, hi: float, tol: float, what: str,
          points: Sequence[float] = ()) -> float:
    result = quad(fn, lo, hi, epsabs=tol, epsrel=tol, limit=QUAD_LIMIT, full_output=1, points=points or None)
    value, abserr = result[0], result[1]
    if len(result) > 3:
        raise NumericError(f"quadrature for {what} did not converge: {result[3]}", abserr)
    return value


def _breakpoints(m: WidderMeasure) -> Sequence[float]:
    return tuple(getattr(m.density, "breakpoints", ()))


def _integrate(m: WidderMeasure, fn: Callable[[float], float], tol: float) -> float:
    total = math.fsum(w * fn(z) for z, w in m.atoms)
    if m.density is not None:
        lo, hi = m.support
        total += _quad(lambda z: m.density(z) * fn(z), lo, hi, tol, "Widder integral", _breakpoints(m))
    return total


def _kernel(z: float, t: float, x: float) -> float:
    if abs(z) < SERIES_CUTOFF:
        shifted = x - 0.5 * z * t
        a = z * shifted
        return shifted * (1.0 + a / 2.0 + a * a / 6.0)
    return math.expm1(z * x - 0.5 * z * z * t) / z


# ============ h and its inverse ============

def h_eval(m: WidderMeasure, t: float, x: float, tol: float = QUAD_TOL) -> float:
    """h(t, x); the z -> 0 kernel limit is x"""
    c0 = m.constant
    if m.is_zero:
        return c0
    return _integrate(m, lambda z: _kernel(z, t, x), tol) + c0


def _h_x_derivative(m: WidderMeasure, t: float, x: float, k: int, tol: float) -> float:
    return _integrate(m, lambda z: z ** (k - 1) * math.exp(z * x - 0.5 * z * z * t), tol)


def h_derivatives(m: WidderMeasure, t: float, x: float, max_order: int = MAX_ORDER,
                  tol: float = QUAD_TOL) -> DerivativeStack:
    """h and its x-derivatives: the k-th is int z^{k-1} exp(z x - z^2 t/2) nu(dz)"""
    if not 0 <= max_order <= MAX_ORDER:
        raise ValueError(f"max_order must lie in [0, {MAX_ORDER}]")
    values = [h_eval(m, t, x, tol)]
    values += [_h_x_derivative(m, t, x, k, tol) for k in range(1, max_order + 1)]
    return DerivativeStack.from_sequence(values, max_order)


def h_time_derivative(m: WidderMeasure, t: float, x: float, tol: float = QUAD_TOL) -> float:
    """h_t = -h_xx / 2, integrated directly from -(z/2) exp(z x - z^2 t/2)"""
    return _integrate(m, lambda z: -0.5 * z * math.exp(z * x - 0.5 * z * z * t), tol)


def h_range(m: WidderMeasure) -> Tuple[float, float]:
    """Infimum and supremum of h(t, .); they do not depend on t"""
    m.require_nonzero()
    c0 = m.constant
    positive = [(z, w) for z, w in m.atoms if z > 0.0]
    negative = [(z, w) for z, w in m.atoms if z < 0.0]
    has_zero = any(z == 0.0 for z, _ in m.atoms)
    density_lo, density_hi = m.support if m.density is not None else (math.inf, -math.inf)

    if negative or has_zero or density_lo <= 0.0:
        lower = -math.inf
    else:
        lower = c0 - math.fsum(w / z for z, w in positive)
        if m.density is not None:
            lower -= _quad(lambda z: m.density(z) / z, density_lo, density_hi, QUAD_TOL, "range bound",
                           _breakpoints(m))

    if positive or has_zero or density_hi >= 0.0:
        upper = math.inf
    else:
        upper = c0 - math.fsum(w / z for z, w in negative)
        if m.density is not None:
            upper -= _quad(lambda z: m.density(z) / z, density_lo, density_hi, QUAD_TOL, "range bound",
                           _breakpoints(m))
    return lower, upper


def h_inverse(m: WidderMeasure, t: float, w: float, tol: float = QUAD_TOL) -> float:
    """
    Solve h(t, x) = w for x.

    The bracket grows geometrically from x = 0, then Brent's method refines it.
    """
    lower, upper = h_range(m)
    if not lower < w < upper:
        raise RangeError(f"w={w} lies outside the range ({lower}, {upper}) of h(t, .)")

    def residual(x: float) -> float:
        return h_eval(m, t, x, tol) - w

    def safe_residual(x: float) -> Optional[float]:
        try:
            value = residual(x)
        except OverflowError:
            return None
        return value if math.isfinite(value) else None

    f_start = residual(0.0)
    if f_start == 0.0:
        return 0.0
    direction = 1.0 if f_start < 0.0 else -1.0
    a, fa = 0.0, f_start
    step = 1.0
    for _ in range(MAX_DOUBLINGS):
        b = direction * step
        fb = safe_residual(b)
        while fb is None:
            b = 0.5 * (a + b)
            fb = safe_residual(b)
            if abs(b - a) < ROOT_XTOL:
                raise RangeError(f"h overflows before bracketing w={w}")
        if fa * fb <= 0.0:
            break
        a, fa = b, fb
        step *= 2.0
    else:
        raise RangeError(f"no bracket for w={w} within {MAX_DOUBLINGS} doublings")

    root = brentq(residual, min(a, b), max(a, b), xtol=ROOT_XTOL, maxiter=500)
    achieved = abs(residual(root))
    if achieved > ROOT_RESIDUAL_TOL * (1.0 + abs(w)):
        raise NumericError(f"h inversion residual too large at w={w}", achieved)
    return root


# ============ Time-Monotone Value Function ============

def _inverse_derivatives(g1: float, g2: float, g3: float, g4: float):
    """Derivatives 1..4 of H = h^{-1} from the derivatives of h at H"""
    h1 = 1.0 / g1
    h2 = -g2 / g1 ** 3
    h3 = (3.0 * g2 * g2 - g1 * g3) / g1 ** 5
    h4 = (-15.0 * g2 ** 3 + 10.0 * g1 * g2 * g3 - g1 * g1 * g4) / g1 ** 7
    return h1, h2, h3, h4


def marginal_jet(m: WidderMeasure, t: float, x: float, order: int = INTERNAL_ORDER - 1,
                 tol: float = QUAD_TOL) -> Jet:
    """Jet of u_x = exp(-H + t/2) in x up to the given order"""
    if not 0 <= order <= 4:
        raise ValueError("marginal jet order must lie in [0, 4]")
    big_h = h_inverse(m, t, x, tol)
    g = [_h_x_derivative(m, t, big_h, k, tol) for k in range(1, order + 1)]
    g += [0.0] * (4 - len(g))
    inv = _inverse_derivatives(*g) if order > 0 else ()
    exponent = Jet([-big_h + 0.5 * t] + [-d for d in inv[:order]])
    return exponent.exp()


def u_eval(m: WidderMeasure, v0: InitialUtility, t: float, x: float, tol: float = QUAD_TOL) -> float:
    """u(t, x) by adaptive time quadrature; exactly V(0, x) at t = 0"""
    if t < 0.0:
        raise ValueError("t must be non-negative")
    if t == 0.0:
        return v0(x)
    m.require_nonzero()

    def integrand(s: float) -> float:
        big_h = h_inverse(m, s, x, tol)
        return math.exp(-big_h + 0.5 * s) * _h_x_derivative(m, s, big_h, 1, tol)

    return -0.5 * _quad(integrand, 0.0, t, tol, "time-monotone value") + v0(x)


def u_time_derivative(m: WidderMeasure, t: float, x: float, tol: float = QUAD_TOL) -> float:
    """u_t = -u_x h_x(t, H) / 2, equal to u_x^2 / (2 u_xx)"""
    big_h = h_inverse(m, t, x, tol)
    return -0.5 * math.exp(-big_h + 0.5 * t) * _h_x_derivative(m, t, big_h, 1, tol)


def u_jet(m: WidderMeasure, v0: InitialUtility, t: float, x: float,
          order: int = INTERNAL_ORDER, include_value: bool = True, tol: float = QUAD_TOL) -> Jet:
    """Jet of u in x up to fifth order; the value slot is NaN when skipped"""
    if not 1 <= order <= INTERNAL_ORDER:
        raise ValueError(f"u jet order must lie in [1, {INTERNAL_ORDER}]")
    value = u_eval(m, v0, t, x, tol) if include_value else math.nan
    marginal = marginal_jet(m, t, x, order - 1, tol)
    return Jet([value, *marginal.c])


def u_derivatives(m: WidderMeasure, v0: InitialUtility, t: float, x: float,
                  max_order: int = MAX_ORDER, tol: float = QUAD_TOL) -> DerivativeStack:
    """u and its x-derivatives by the chain rule through h^{-1}"""
    if not 0 <= max_order <= MAX_ORDER:
        raise ValueError(f"max_order must lie in [0, {MAX_ORDER}]")
    if max_order == 0:
        return DerivativeStack(value=u_eval(m, v0, t, x, tol))
    return DerivativeStack.from_sequence(u_jet(m, v0, t, x, max_order, tol=tol).c, max_order)


# ============ Datum Checks ============

_FD_STENCILS = {
    1: ((-2, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0)),
    2: ((-2, -1.0), (-1, 16.0), (0, -30.0), (1, 16.0), (2, -1.0)),
    3: ((-3, 1.0), (-2, -8.0), (-1, 13.0), (1, -13.0), (2, 8.0), (3, -1.0)),
    4: ((-3, -1.0), (-2, 12.0), (-1, -39.0), (0, 56.0), (1, -39.0), (2, 12.0), (3, -1.0)),
}
_FD_DENOMINATORS = {1: 12.0, 2: 12.0, 3: 8.0, 4: 6.0}


def central_difference(fn: Callable[[float], float], x: float, order: int, step: float) -> float:
    """Fourth-order accurate central difference of the given derivative order"""
    stencil = _FD_STENCILS[order]
    total = math.fsum(c * fn(x + k * step) for k, c in stencil)
    return total / (_FD_DENOMINATORS[order] * step ** order)


def datum_derivative(v0: InitialUtility, x: float, order: int) -> float:
    """Derivative of V(0, .) from the analytic handle, else a central difference"""
    if order == 0:
        return v0(x)
    if v0.derivative is not None:
        return v0.derivative(x, order)
    if order >= 3:
        logger.warning("datum derivative of order %d taken by finite differences; expect noise", order)
    return central_difference(v0.value_at, x, order, DATUM_FD_STEP * (1.0 + abs(x)))


def datum_consistency(m: WidderMeasure, v0: InitialUtility, xs: Iterable[float],
                      tol: float = 1e-6) -> float:
    """
    Check V_x(0, x) = exp(-h^{-1}(0, x)) on sample points.

    Returns the worst relative error; raises when it exceeds `tol`.
    """
    worst = 0.0
    for x in xs:
        lhs = datum_derivative(v0, x, 1)
        rhs = math.exp(-h_inverse(m, 0.0, x))
        worst = max(worst, abs(lhs - rhs) / abs(rhs))
    if worst > tol:
        raise InvalidModelError(
            f"Widder measure does not represent the initial utility (relative marginal error {worst:.2e})"
        )
    return worst
