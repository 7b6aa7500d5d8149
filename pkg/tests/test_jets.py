# -*- coding: utf-8 -*-
"""Tests for derivative jets"""

import math

import pytest

from forward_performance.jets import Jet


def identity_jet(x, order=4):
    return Jet([x, 1.0] + [0.0] * (order - 1))


class TestJetArithmetic:
    def test_product_rule(self):
        x = identity_jet(1.5)
        cube = x * x * x
        assert cube[0] == pytest.approx(1.5 ** 3)
        assert cube[1] == pytest.approx(3 * 1.5 ** 2)
        assert cube[2] == pytest.approx(6 * 1.5)
        assert cube[3] == pytest.approx(6.0)
        assert cube[4] == pytest.approx(0.0)

    def test_quotient_rule(self):
        x = identity_jet(2.0)
        inv = 1.0 / x
        for k in range(5):
            expected = (-1) ** k * math.factorial(k) / 2.0 ** (k + 1)
            assert inv[k] == pytest.approx(expected, rel=1e-12), f"order {k}"

    def test_exponential(self):
        x = identity_jet(0.3)
        e = (2.0 * x).exp()
        for k in range(5):
            assert e[k] == pytest.approx(2.0 ** k * math.exp(0.6), rel=1e-12)

    def test_division_then_multiplication_is_identity(self):
        f = Jet([1.2, -0.4, 0.7, 2.0])
        g = Jet([0.8, 0.3, -1.1, 0.5])
        back = (f / g) * g
        for k in range(4):
            assert back[k] == pytest.approx(f[k], abs=1e-12)

    def test_scalar_operations(self):
        f = Jet([1.0, 2.0, 3.0])
        assert (f + 1.0)[0] == 2.0 and (f + 1.0)[1] == 2.0
        assert (3.0 - f)[0] == 2.0 and (3.0 - f)[1] == -2.0
        assert (f * 2.0)[2] == 6.0
        assert (f / 2.0)[1] == 1.0

    def test_mixed_orders_truncate_to_the_shorter(self):
        f = Jet([1.0, 2.0, 3.0, 4.0])
        g = Jet([1.0, 1.0])
        assert (f + g).order == 1
        assert (f * g).order == 1

    def test_merton_ratio_from_a_power_stack(self):
        # V = -x^-1: P = V_x^2 / V_xx = -x / 2
        x = 1.7
        vx = Jet([x ** -2, -2 * x ** -3, 6 * x ** -4])
        vxx = vx.derivative()
        ratio = vx * vx / vxx
        assert ratio[0] == pytest.approx(-x / 2.0, rel=1e-12)
        assert ratio[1] == pytest.approx(-0.5, rel=1e-12)


class TestJetErrors:
    def test_empty_jet(self):
        with pytest.raises(ValueError):
            Jet([])

    def test_division_by_vanishing_value(self):
        with pytest.raises(ZeroDivisionError):
            Jet([1.0, 1.0]) / Jet([0.0, 1.0])

    def test_derivative_of_a_bare_value(self):
        with pytest.raises(ValueError):
            Jet([1.0]).derivative()
