# -*- coding: utf-8 -*-
"""Tests for the leading-order surface and its correction terms"""

import math

import pytest

from forward_performance.errors import ConcavityError, InvalidModelError
from forward_performance.expansion import (
    BoundedCache,
    ValueSurface,
    approx_value,
    change_of_variables,
    heat_grid,
    natural_parametrization_check,
    v0_cross_derivatives,
    v01_eval,
    v0_eval,
    v10_eval,
    v2_eval,
    w0_eval,
    xi_of,
)
from forward_performance.jets import Jet
from forward_performance.power import power_market_model


def closed_v0(t, x):
    """lambda_bar^2 = 1 at y = 1, gamma = 2"""
    return -4.0 / x * math.exp(t / 4.0)


class TestLeadingOrder:
    def test_power_surface_matches_closed_form(self, power_surface):
        for t, x in [(0.1, 1.0), (0.5, 2.0), (1.0, 0.5)]:
            value, stack = v0_eval(power_surface, t, x, 1.0)
            assert value == pytest.approx(closed_v0(t, x), rel=1e-8)
            assert stack.d1 == pytest.approx(-closed_v0(t, x) / x, rel=1e-8)
            assert stack.d2 == pytest.approx(2.0 * closed_v0(t, x) / x ** 2, rel=1e-8)

    def test_averaged_clock_scales_with_y1(self, power_surface):
        # lambda_bar^2(y1) = y1 for the sqrt family with Lambda = 1
        value, _ = v0_eval(power_surface, 0.4, 1.0, 2.5)
        assert value == pytest.approx(closed_v0(0.4 * 2.5, 1.0), rel=1e-8)

    def test_initial_time_is_the_datum(self, power_surface):
        value, _ = v0_eval(power_surface, 0.0, 1.3, 1.0)
        assert value == power_surface.model.v0(1.3)

    def test_cross_derivatives(self, power_surface):
        t, x, y1 = 0.5, 1.0, 1.0
        v_y1, v_xy1 = v0_cross_derivatives(power_surface, t, x, y1)
        # d/dy1 of -4/x exp(t y1 / 4) at y1 = 1
        assert v_y1 == pytest.approx(closed_v0(t, x) * t / 4.0, rel=1e-7)
        assert v_xy1 == pytest.approx(-closed_v0(t, x) * t / (4.0 * x), rel=1e-7)


class TestCorrections:
    def test_slow_correction_closed_form(self, power_surface):
        t = 0.1
        v10 = v10_eval(power_surface, t, 1.0, 1.0)
        assert v10 == pytest.approx(0.00003125 * closed_v0(t, 1.0), rel=1e-8)

    def test_slow_correction_matches_its_jet(self, power_surface):
        for t, x in [(0.1, 1.0), (0.7, 2.0)]:
            assert power_surface.v10_jet(t, x, 1.0)[0] == pytest.approx(v10_eval(power_surface, t, x, 1.0), rel=1e-10)

    def test_fast_correction_closed_form(self, fast_surface):
        t = 0.1
        v01 = v01_eval(fast_surface, t, 1.0, 1.0)
        assert v01 == pytest.approx(-0.000625 * closed_v0(t, 1.0), rel=1e-6)

    def test_corrections_vanish_at_initial_time(self, power_surface, fast_surface):
        assert v10_eval(power_surface, 0.0, 1.0, 1.0) == 0.0
        assert v01_eval(fast_surface, 0.0, 1.0, 1.0) == 0.0

    def test_zero_correlation_gives_exact_zero(self, power_params):
        surface = ValueSurface(power_market_model(power_params.with_rho([0.0])))
        assert v10_eval(surface, 0.5, 1.0, 1.0) == 0.0
        assert v01_eval(surface, 0.5, 1.0, 1.0) == 0.0

    def test_second_order_fast_term(self, fast_surface):
        # phi = y2 - 1 and P = -2 exp(t/4) / x
        t, x = 0.3, 1.0
        for y2 in (0.5, 1.5):
            expected = -0.5 * (y2 - 1.0) * (-2.0 * math.exp(t / 4.0) / x)
            assert v2_eval(fast_surface, t, x, 1.0, y2) == pytest.approx(expected, rel=1e-5, abs=1e-9)


class TestAssembly:
    def test_combined_identity(self, power_surface):
        result = approx_value(power_surface, 0.5, 1.0, 1.0, 1.0, 0.04, 0.0)
        assert result.combined == result.v0 + math.sqrt(0.04) * result.v10 + 0.0 * result.v01

    def test_independent_of_fast_state(self, separable_surface):
        a = approx_value(separable_surface, 0.5, 1.0, 1.0, 0.5, 0.01, 0.01)
        b = approx_value(separable_surface, 0.5, 1.0, 1.0, 1.5, 0.01, 0.01)
        assert a.combined == b.combined

    def test_zero_scales_reduce_to_leading_order(self, separable_surface):
        result = approx_value(separable_surface, 0.5, 1.0, 1.0, 1.0, 0.0, 0.0)
        assert result.combined == result.v0

    def test_negative_scale_rejected(self, power_surface):
        with pytest.raises(InvalidModelError):
            approx_value(power_surface, 0.5, 1.0, 1.0, 1.0, -0.01, 0.0)


class TestNaturalParametrization:
    def test_quadrature_matches_closed_forms(self, separable_surface):
        for t, x in [(0.5, 1.0), (1.0, 2.0)]:
            report = natural_parametrization_check(separable_surface, t, x, 1.0)
            assert report.discrepancy <= 1e-8

    def test_slow_closed_form_is_reproduced(self, power_surface):
        report = natural_parametrization_check(power_surface, 0.8, 1.0, 1.0)
        assert report.slow_quadrature == pytest.approx(report.slow_closed, rel=1e-10)
        assert report.fast_closed == 0.0

    def test_single_node_is_exact(self, separable_surface):
        # slow integrand affine in s, fast integrand constant
        for t, x in [(0.5, 1.0), (1.0, 2.0)]:
            report = natural_parametrization_check(separable_surface, t, x, 1.0, n_quad=1)
            assert report.slow_quadrature == pytest.approx(report.slow_closed, rel=1e-12, abs=1e-15)
            assert report.fast_quadrature == pytest.approx(report.fast_closed, rel=1e-12, abs=1e-15)
            assert report.n_quad == 1


class TestHeatCoordinates:
    def test_round_trip(self, power_surface):
        for t, x in [(0.2, 0.5), (1.0, 3.0)]:
            xi = xi_of(power_surface, t, x, 1.0)
            change = change_of_variables(power_surface, t, xi, 1.0)
            assert change.x == pytest.approx(x, rel=1e-9)
            assert w0_eval(power_surface, t, xi, 1.0) == pytest.approx(v0_eval(power_surface, t, x, 1.0)[0], rel=1e-8)

    def test_heat_grid_is_increasing(self, power_surface):
        grid = heat_grid(power_surface, 0.5, 1.0, n=11)
        assert len(grid) == 11
        assert all(b > a for a, b in zip(grid, grid[1:]))


class TestConcavityGuard:
    def test_convex_marginal_is_rejected(self, power_params, monkeypatch):
        surface = ValueSurface(power_market_model(power_params))
        monkeypatch.setattr("forward_performance.expansion.u_jet",
                            lambda *args, **kwargs: Jet([0.0, 1.0, 0.5, 0.1, 0.0, 0.0, 0.0]))
        with pytest.raises(ConcavityError):
            surface.point(0.5, 1.0, 1.0)


class TestCaching:
    def test_least_recently_used_entry_is_dropped(self):
        cache = BoundedCache(2)
        cache.put("a", 1.0)
        cache.put("b", 2.0)
        assert cache.get("a") == 1.0
        cache.put("c", 3.0)
        assert len(cache) == 2
        assert "b" not in cache
        assert cache.get("a") == 1.0 and cache.get("c") == 3.0

    def test_overwrite_keeps_size(self):
        cache = BoundedCache(2)
        cache.put("a", 1.0)
        cache.put("a", 4.0)
        assert len(cache) == 1
        assert cache.get("a") == 4.0

    def test_size_must_be_positive(self):
        with pytest.raises(ValueError):
            BoundedCache(0)

    def test_surface_memory_is_bounded(self, power_params):
        surface = ValueSurface(power_market_model(power_params), max_points=8)
        for i in range(20):
            x = 0.5 + 0.1 * i
            v0_eval(surface, 0.5, x, 1.0)
            v01_eval(surface, 0.5, x, 1.0)
        assert len(surface._points) <= 8
        assert len(surface._values) <= 8
        # one slow state
        assert surface.cache_size <= 17

    def test_evicted_points_recompute_identically(self, power_params):
        surface = ValueSurface(power_market_model(power_params), max_points=2)
        first, _ = v0_eval(surface, 0.5, 1.0, 1.0)
        for x in (2.0, 3.0, 4.0):
            v0_eval(surface, 0.5, x, 1.0)
        assert v0_eval(surface, 0.5, 1.0, 1.0)[0] == first
