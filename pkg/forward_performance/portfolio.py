# -*- coding: utf-8 -*-
"""
Approximately optimal feedback portfolio

    pi = -sigma^+ lambda (R + sqrt(delta) dR10 + sqrt(epsilon) dR01)
         - sqrt(delta) kappa sigma^+ rho_s V_xy1 / V_xx
         + sqrt(epsilon) alpha sigma^+ rho_f phi' (V_x^2 / V_xx)_x / (2 V_xx)

with R = V_x / V_xx and dR = (V_xx C_x - V_x C_xx) / V_xx^2 for each correction
C. All derivatives are of V0; portfolios are currency amounts per asset.
"""

import logging
import math

import numpy as np

from .errors import InvalidModelError
from .expansion import ValueSurface, v0_cross_derivatives
from .factors import phi_prime
from .models import PortfolioVector

logger = logging.getLogger(__name__)


PINV_CUTOFF = 1e-10


def sigma_pinv(sigma_matrix) -> np.ndarray:
    """
    Moore-Penrose inverse of the d x n volatility matrix, via SVD.

    Full row rank is required so that sigma sigma^+ is the d x d identity.
    """
    sigma = np.atleast_2d(np.asarray(sigma_matrix, dtype=float))
    d = sigma.shape[0]
    singular = np.linalg.svd(sigma, compute_uv=False)
    if singular.size < d or singular[0] == 0.0 or singular[-1] <= PINV_CUTOFF * singular[0]:
        raise InvalidModelError(f"volatility matrix of shape {sigma.shape} does not have full row rank {d}")
    return np.linalg.pinv(sigma, rcond=PINV_CUTOFF)


def _correction_tilt(v_x: float, v_xx: float, jet) -> float:
    return (v_xx * jet[1] - v_x * jet[2]) / (v_xx * v_xx)


def pi_approx(s: ValueSurface, t: float, x: float, y1: float, y2: float,
              delta: float, epsilon: float) -> PortfolioVector:
    """Myopic term plus slow and fast hedges"""
    if delta < 0.0 or epsilon < 0.0:
        raise InvalidModelError("delta and epsilon must be non-negative")
    model = s.model
    y1, y2 = s.slow_state(y1), s.fast_state(y2)
    point = s.point(t, x, y1)
    v_x, v_xx = point.v_x, point.v_xx

    pinv = sigma_pinv(model.sigma(y1, y2))
    lam = model.sharpe(y1, y2)
    root_delta, root_eps = math.sqrt(delta), math.sqrt(epsilon)

    tilt = v_x / v_xx
    if delta > 0.0:
        tilt += root_delta * _correction_tilt(v_x, v_xx, s.v10_jet(t, x, y1))
    if epsilon > 0.0:
        tilt += root_eps * _correction_tilt(v_x, v_xx, s.v01_jet(t, x, y1))
    myopic = -(pinv @ lam) * tilt

    slow_hedge = np.zeros_like(myopic)
    if delta > 0.0 and not model.slow.is_frozen and np.any(model.rho_s):
        _, v_xy1 = v0_cross_derivatives(s, t, x, y1)
        kappa = float(model.slow.kappa(y1))
        slow_hedge = -root_delta * kappa * (pinv @ model.rho_s) * v_xy1 / v_xx

    fast_hedge = np.zeros_like(myopic)
    if epsilon > 0.0 and not model.fast.is_frozen and np.any(model.rho_f):
        alpha = float(model.fast.alpha(y2))
        slope = phi_prime(model, y1, y2)
        fast_hedge = 0.5 * root_eps * alpha * (pinv @ model.rho_f) * slope * point.curvature[1] / v_xx

    return PortfolioVector.assemble(myopic, slow_hedge, fast_hedge)


def pi_approx_slow(s: ValueSurface, t: float, x: float, y: float, delta: float) -> PortfolioVector:
    """Portfolio when only a slow factor is present"""
    if not s.model.fast.is_frozen:
        raise InvalidModelError("pi_approx_slow needs a model whose fast factor is frozen")
    return pi_approx(s, t, x, y, s.model.fast.frozen_at, delta, 0.0)


def pi_approx_fast(s: ValueSurface, t: float, x: float, y: float, epsilon: float) -> PortfolioVector:
    """Portfolio when only a fast factor is present"""
    if not s.model.slow.is_frozen:
        raise InvalidModelError("pi_approx_fast needs a model whose slow factor is frozen")
    return pi_approx(s, t, x, s.model.slow.frozen_at, y, 0.0, epsilon)
