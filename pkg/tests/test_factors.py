# -*- coding: utf-8 -*-
"""Tests for factor models, the invariant law and the Poisson corrector"""

import math

import numpy as np
import pytest

from forward_performance.errors import InvalidModelError, RangeError
from forward_performance.factors import (
    FastFactor,
    MarketModel,
    SlowFactor,
    affine_sharpe,
    averaged_coefficients,
    invariant_density,
    lambda_bar,
    phi,
    phi_prime,
    poisson_residual,
    poisson_solution,
    sqrt_sharpe,
)
from forward_performance.power import fast_market_model
from forward_performance.widder import InitialUtility, WidderMeasure


def make_model(fast: FastFactor, lambda_f=(1.0,), rho_f=(0.05,), lambda_s=(0.0,), rho_s=(0.0,),
               slow: SlowFactor = None, rho_sf: float = 0.0, family: str = "sqrt") -> MarketModel:
    if family == "sqrt":
        sharpe, dsharpe = sqrt_sharpe(lambda_s, lambda_f)
    else:
        sharpe, dsharpe = affine_sharpe([0.2] * len(lambda_f), lambda_s, lambda_f)
    d = len(lambda_f)
    return MarketModel(
        lambda_fn=sharpe, dlambda_dy1=dsharpe, sigma_fn=lambda y1, y2: np.eye(d),
        rho_s=list(rho_s), rho_f=list(rho_f), rho_sf=rho_sf,
        slow=slow or SlowFactor.frozen(1.0), fast=fast,
        widder=WidderMeasure.power(2.0), v0=InitialUtility.power(2.0),
    )


class TestInvariantLaw:
    def test_cir_law_is_a_gamma_distribution(self):
        law = invariant_density(FastFactor.cir(1.0, 1.0))
        assert law.weights.sum() == pytest.approx(1.0, abs=1e-10)
        assert law.expect(law.nodes) == pytest.approx(1.0, rel=1e-7)
        # shape 2, rate 2: variance 1/2
        assert law.expect((law.nodes - 1.0) ** 2) == pytest.approx(0.5, rel=1e-6)

    def test_cir_density_closed_form(self):
        law = invariant_density(FastFactor.cir(1.0, 1.0))
        for y in (0.2, 1.0, 2.5):
            assert float(law.density(y)) == pytest.approx(4.0 * y * math.exp(-2.0 * y), rel=1e-6)

    def test_ou_law_is_gaussian(self):
        law = invariant_density(FastFactor.ou(0.0, 0.5))
        assert law.expect(law.nodes) == pytest.approx(0.0, abs=1e-9)
        assert law.expect(law.nodes ** 2) == pytest.approx(0.125, rel=1e-6)
        assert law.lower < -1.0 and law.upper > 1.0

    def test_frozen_factor_is_a_point_mass(self):
        law = invariant_density(FastFactor.frozen(0.7))
        assert law.is_point_mass
        assert law.expect(law.nodes) == pytest.approx(0.7)

    def test_rescaling_keeps_the_law(self):
        base = FastFactor.cir(1.0, 1.0)
        law = invariant_density(base)
        scaled = invariant_density(base.rescaled(3.0))
        assert scaled.expect(scaled.nodes ** 2) == pytest.approx(law.expect(law.nodes ** 2), rel=1e-6)


    @pytest.mark.parametrize("factor", [FastFactor.cir(1.0, 1.0), FastFactor.cir(1.5, 0.8, rate=2.0),
                                        FastFactor.ou(0.0, 0.5)], ids=["cir", "cir-skewed", "ou"])
    def test_generator_averages_to_zero(self, factor):
        # the invariant law annihilates the generator applied to polynomials
        law = invariant_density(factor)
        y = law.nodes
        drift = np.asarray(factor.gamma(y), dtype=float)
        diffusion = 0.5 * np.asarray(factor.alpha(y), dtype=float) ** 2
        for k in (1, 2, 3):
            first = drift * k * y ** (k - 1)
            second = diffusion * k * (k - 1) * y ** max(k - 2, 0)
            scale = law.expect(np.abs(first)) + law.expect(np.abs(second))
            assert abs(law.expect(first + second)) <= 1e-6 * (1.0 + scale), f"degree {k}"


class TestAveraging:
    def test_lambda_bar_for_cir(self):
        model = make_model(FastFactor.cir(1.5, 0.8), lambda_f=(0.7,))
        assert lambda_bar(model, 1.0) ** 2 == pytest.approx(0.49 * 1.5, rel=1e-6)

    def test_poisson_slope_is_constant_for_cir(self):
        model = make_model(FastFactor.cir(1.0, 1.0))
        for y2 in (0.3, 1.0, 2.0):
            assert phi_prime(model, 1.0, y2) == pytest.approx(1.0, rel=1e-6)

    def test_corrector_is_centered(self):
        model = make_model(FastFactor.cir(1.0, 1.0))
        for y2 in (0.3, 1.0, 2.0):
            assert phi(model, 1.0, y2) == pytest.approx(y2 - 1.0, abs=1e-6)
        solution = poisson_solution(model, 1.0)
        assert abs(solution.law.expect(solution.phi(solution.law.nodes))) < 1e-8

    def test_plug_back_residual(self):
        model = make_model(FastFactor.ou(0.0, 0.5), family="affine", lambda_f=(0.3,))
        for y2 in (-0.5, 0.0, 0.5):
            assert poisson_residual(model, 0.5, y2) <= 1e-5

    def test_fast_correction_constant(self, power_params):
        model = fast_market_model(power_params)
        coefficients = averaged_coefficients(model, 1.0)
        # m0 beta Lambda.rho ||Lambda||^2
        assert coefficients.c01 == pytest.approx(0.05, rel=1e-6)
        assert coefficients.c10 == 0.0

    def test_zero_source_gives_exact_zeros(self):
        # lambda does not depend on y2
        model = make_model(FastFactor.cir(1.0, 1.0), lambda_f=(0.0,), lambda_s=(1.0,),
                           slow=SlowFactor.cir(1.0, 1.0), rho_s=(0.3,))
        assert poisson_solution(model, 1.0).vanishes
        assert phi_prime(model, 1.0, 0.5) == 0.0
        assert averaged_coefficients(model, 1.0).c01 == 0.0

    def test_zero_fast_correlation_gives_zero_c01(self):
        model = make_model(FastFactor.cir(1.0, 1.0), rho_f=(0.0,))
        assert averaged_coefficients(model, 1.0).c01 == 0.0

    def test_slow_constants(self):
        model = make_model(FastFactor.cir(1.0, 1.0), lambda_f=(0.0,), lambda_s=(1.0,), rho_f=(0.0,),
                           slow=SlowFactor.cir(1.0, 1.0), rho_s=(0.3,))
        coefficients = averaged_coefficients(model, 2.0)
        assert coefficients.lambda_bar == pytest.approx(math.sqrt(2.0), rel=1e-10)
        assert coefficients.lambda_bar_prime == pytest.approx(0.5 / math.sqrt(2.0), rel=1e-10)
        assert coefficients.c10 == pytest.approx(0.3 * 2.0, rel=1e-10)

    @pytest.mark.parametrize("factor", [0.1, 4.0, 10.0])
    def test_rescaling_invariance(self, factor):
        def build(fast):
            return make_model(fast, lambda_f=(1.0,), rho_f=(0.3,), lambda_s=(0.5,), rho_s=(0.2,),
                              slow=SlowFactor.cir(1.0, 1.0), rho_sf=0.1)

        base = FastFactor.cir(1.0, 1.0)
        a = averaged_coefficients(build(base), 1.0)
        b = averaged_coefficients(build(base.rescaled(factor)), 1.0)
        assert b.lambda_bar == pytest.approx(a.lambda_bar, rel=1e-7)
        assert b.lambda_bar_prime == pytest.approx(a.lambda_bar_prime, rel=1e-7)
        assert b.c10 == pytest.approx(a.c10, rel=1e-7)
        assert b.c01 == pytest.approx(a.c01 / math.sqrt(factor), rel=1e-6)

    def test_slope_outside_truncation(self):
        model = make_model(FastFactor.cir(1.0, 1.0))
        upper = poisson_solution(model, 1.0).law.upper
        with pytest.raises(RangeError):
            phi_prime(model, 1.0, upper + 10.0)


class TestMarketModel:
    def test_non_positive_definite_correlation(self):
        model = make_model(FastFactor.cir(1.0, 1.0), rho_s=(0.9,), rho_f=(0.9,),
                           slow=SlowFactor.cir(1.0, 1.0), rho_sf=-0.9)
        with pytest.raises(InvalidModelError):
            model.check_invariants()

    def test_rank_deficient_sigma(self):
        sharpe, dsharpe = sqrt_sharpe([1.0, 0.0], [0.0, 1.0])
        model = MarketModel(
            lambda_fn=sharpe, dlambda_dy1=dsharpe, sigma_fn=lambda y1, y2: np.array([[1.0, 1.0], [1.0, 1.0]]),
            rho_s=[0.1, 0.0], rho_f=[0.0, 0.1], rho_sf=0.0,
            slow=SlowFactor.cir(1.0, 1.0), fast=FastFactor.cir(1.0, 1.0),
            widder=WidderMeasure.power(2.0), v0=InitialUtility.power(2.0),
        )
        with pytest.raises(InvalidModelError):
            model.check_invariants()

    def test_mismatched_correlation_lengths(self):
        with pytest.raises(InvalidModelError):
            make_model(FastFactor.cir(1.0, 1.0), rho_s=(0.1, 0.2))

    def test_sharpe_derivative_fallback(self):
        sharpe, dsharpe = affine_sharpe([0.2], [0.1], [0.3])
        model = MarketModel(
            lambda_fn=sharpe, sigma_fn=lambda y1, y2: np.eye(1), rho_s=[0.2], rho_f=[0.3], rho_sf=0.0,
            slow=SlowFactor.ou(0.5, 0.4), fast=FastFactor.ou(0.0, 0.5),
            widder=WidderMeasure.power(2.0), v0=InitialUtility.power(2.0),
        )
        assert model.sharpe_dy1(0.5, 0.0) == pytest.approx(np.asarray(dsharpe(0.5, 0.0)), rel=1e-8)

    def test_valid_model_passes(self):
        make_model(FastFactor.cir(1.0, 1.0), slow=SlowFactor.cir(1.0, 1.0), rho_s=(0.2,)).check_invariants()
