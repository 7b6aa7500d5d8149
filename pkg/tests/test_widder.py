# -*- coding: utf-8 -*-
"""Tests for the Widder representation and the time-monotone value function"""

import math

import numpy as np
import pytest

from forward_performance.errors import InvalidModelError, RangeError
from forward_performance.jets import Jet
from forward_performance.widder import (
    DensityFamily,
    InitialUtility,
    WidderMeasure,
    central_difference,
    datum_consistency,
    datum_derivative,
    h_derivatives,
    h_eval,
    h_inverse,
    h_range,
    h_time_derivative,
    marginal_jet,
    u_derivatives,
    u_eval,
    u_time_derivative,
)


POWER = WidderMeasure.power(2.0)
DATUM = InitialUtility.power(2.0)

# two atoms plus a uniform band; c0 puts the bottom of the range of h at 0
MIXED = WidderMeasure(atoms=((0.5, 2.0), (2.0, 1.0)), density=DensityFamily("uniform", 0.2, 1.0, mass=0.8),
                      support=(0.2, 1.0), c0=4.5 + math.log(5.0))
MIXED_DATUM = InitialUtility.from_widder(MIXED, x_ref=1.0, v_ref=0.0)
MEASURES = pytest.mark.parametrize("m, v0", [(POWER, DATUM), (MIXED, MIXED_DATUM)], ids=["power", "mixed"])


def power_u(t, x):
    """gamma = 2: u(t, x) = -(4 / x) exp(t / 4)"""
    return -4.0 / x * math.exp(t / 4.0)


class TestWidderMeasure:
    def test_power_measure_gives_closed_form_h(self):
        for t, x in [(0.0, 0.0), (1.0, 1.0), (2.5, -1.0), (0.3, 4.0)]:
            expected = 2.0 * math.exp(x / 2.0 - t / 8.0)
            assert h_eval(POWER, t, x) == pytest.approx(expected, rel=1e-12)

    def test_single_atom_value(self):
        m = WidderMeasure(atoms=((0.5, 2.0),), c0=2.0)
        assert h_eval(m, 1.0, 1.0) == pytest.approx(3.8200, abs=1e-4)

    def test_range_of_positive_atoms(self):
        m = WidderMeasure(atoms=((0.5, 2.0),), c0=2.0)
        lower, upper = h_range(m)
        assert lower == pytest.approx(-2.0)
        assert upper == math.inf

    def test_rejects_non_positive_weight(self):
        with pytest.raises(InvalidModelError):
            WidderMeasure(atoms=((0.5, 0.0),), c0=1.0)

    def test_rejects_duplicate_atoms(self):
        with pytest.raises(InvalidModelError):
            WidderMeasure(atoms=((0.5, 1.0), (0.5, 2.0)), c0=1.0)

    def test_density_needs_support(self):
        with pytest.raises(InvalidModelError):
            WidderMeasure(density=lambda z: 1.0)

    def test_zero_measure_is_constant(self):
        m = WidderMeasure(c0=1.5)
        assert m.is_zero
        assert h_eval(m, 1.0, 3.0) == 1.5
        with pytest.raises(InvalidModelError):
            h_inverse(m, 0.0, 1.5)

    def test_empty_measure_without_constant(self):
        with pytest.raises(InvalidModelError):
            h_eval(WidderMeasure(), 0.0, 1.0)

    def test_mixed_measure_range_starts_at_zero(self):
        lower, upper = h_range(MIXED)
        assert lower == pytest.approx(0.0, abs=1e-9)
        assert upper == math.inf

    def test_density_families_carry_their_mass(self):
        for family in ("uniform", "triangular"):
            m = WidderMeasure(density=DensityFamily(family, 0.2, 1.0, mass=0.8), support=(0.2, 1.0))
            assert m.total_mass() == pytest.approx(0.8, rel=1e-10)

    def test_density_vanishes_off_support(self):
        density = DensityFamily("triangular", 0.2, 1.0)
        assert density(0.1) == 0.0 and density(1.2) == 0.0
        assert density(0.6) == pytest.approx(2.5)

    def test_unknown_density_family(self):
        with pytest.raises(InvalidModelError):
            DensityFamily("gaussian", 0.2, 1.0)

    def test_density_part_matches_atoms_in_the_limit(self):
        # uniform density on a narrow band around 1/2 behaves like an atom there
        m = WidderMeasure(density=lambda z: 1.0 / 0.002, support=(0.499, 0.501), c0=2.0)
        assert h_eval(m, 0.5, 1.0) == pytest.approx(h_eval(POWER, 0.5, 1.0), rel=1e-5)


class TestHeatFunction:
    def test_backward_heat_equation(self):
        m = WidderMeasure(atoms=((0.5, 2.0), (-0.3, 1.0)), c0=0.0)
        for t, x in [(0.2, 0.1), (1.0, -0.5)]:
            stack = h_derivatives(m, t, x)
            assert h_time_derivative(m, t, x) == pytest.approx(-0.5 * stack.d2, rel=1e-12)

    def test_derivatives_of_power_h(self):
        stack = h_derivatives(POWER, 1.0, 2.0)
        base = 2.0 * math.exp(1.0 - 1.0 / 8.0)
        assert stack.d1 == pytest.approx(base / 2.0, rel=1e-12)
        assert stack.d4 == pytest.approx(base / 16.0, rel=1e-12)

    def test_inverse_of_power_h(self):
        assert h_inverse(POWER, 0.0, 2.0 * math.e) == pytest.approx(2.0, abs=1e-10)

    def test_inverse_round_trip(self):
        m = WidderMeasure(atoms=((0.5, 2.0), (1.5, 0.5)), c0=1.0)
        for t, x in [(0.0, -3.0), (0.7, 0.4), (2.0, 5.0)]:
            assert h_inverse(m, t, h_eval(m, t, x)) == pytest.approx(x, abs=1e-9)

    def test_inverse_outside_range(self):
        m = WidderMeasure(atoms=((0.5, 2.0),), c0=2.0)
        with pytest.raises(RangeError):
            h_inverse(m, 0.0, -3.0)


class TestTimeMonotoneValue:
    def test_matches_power_closed_form(self):
        rng = np.random.default_rng(7)
        for t, x in zip(rng.uniform(0.0, 2.0, 50), rng.uniform(0.3, 5.0, 50)):
            assert u_eval(POWER, DATUM, t, x) == pytest.approx(power_u(t, x), rel=1e-8)

    def test_initial_time_reproduces_datum_exactly(self):
        for x in (0.5, 1.0, 3.0):
            assert u_eval(POWER, DATUM, 0.0, x) == DATUM(x)

    def test_negative_time_rejected(self):
        with pytest.raises(ValueError):
            u_eval(POWER, DATUM, -0.1, 1.0)

    def test_derivative_stack_closed_form(self):
        t, x = 0.8, 1.5
        growth = math.exp(t / 4.0)
        stack = u_derivatives(POWER, DATUM, t, x)
        assert stack.d1 == pytest.approx(4.0 / x ** 2 * growth, rel=1e-10)
        assert stack.d2 == pytest.approx(-8.0 / x ** 3 * growth, rel=1e-10)
        assert stack.d3 == pytest.approx(24.0 / x ** 4 * growth, rel=1e-9)
        assert stack.d4 == pytest.approx(-96.0 / x ** 5 * growth, rel=1e-8)

    def test_derivative_stack_against_finite_differences(self):
        m = WidderMeasure(atoms=((0.5, 2.0), (1.5, 0.5)), c0=1.0)
        t, x = 0.6, 1.2
        jet = marginal_jet(m, t, x, order=3)

        def marginal(z):
            return marginal_jet(m, t, z, order=0)[0]

        for k, step, rel in ((1, 1e-2, 1e-6), (2, 1e-2, 1e-6), (3, 2e-2, 1e-5)):
            fd = central_difference(marginal, x, k, step)
            assert jet[k] == pytest.approx(fd, rel=rel), f"order {k + 1} derivative"

    def test_time_derivative(self):
        t, x = 1.0, 2.0
        assert u_time_derivative(POWER, t, x) == pytest.approx(-1.0 / x * math.exp(t / 4.0), rel=1e-10)
        stack = u_derivatives(POWER, DATUM, t, x, max_order=2)
        assert u_time_derivative(POWER, t, x) == pytest.approx(stack.d1 ** 2 / (2.0 * stack.d2), rel=1e-10)

    def test_marginal_jet_is_a_jet(self):
        assert isinstance(marginal_jet(POWER, 0.5, 1.0, order=2), Jet)


    @MEASURES
    def test_risk_tolerance_is_h_x(self, m, v0):
        # -u_x / u_xx evaluated at w = h(t, x) equals h_x(t, x)
        for t, x in [(0.0, 0.3), (0.5, 1.0), (1.5, -0.4)]:
            w = h_eval(m, t, x)
            jet = marginal_jet(m, t, w, order=1)
            assert -jet[0] / jet[1] == pytest.approx(h_derivatives(m, t, x, max_order=1).d1, rel=1e-8)

    @MEASURES
    def test_value_decreases_in_time(self, m, v0):
        for x in (0.5, 1.0, 3.0):
            late, mid, start = (u_eval(m, v0, t, x) for t in (1.0, 0.5, 0.0))
            assert late < mid < start

    @MEASURES
    def test_time_derivative_against_finite_differences(self, m, v0):
        t = 0.5
        for x in (0.7, 2.0):
            fd = central_difference(lambda s: u_eval(m, v0, s, x), t, 1, 1e-2)
            jet = marginal_jet(m, t, x, order=1)
            assert u_time_derivative(m, t, x) == pytest.approx(fd, rel=1e-6)
            assert u_time_derivative(m, t, x) == pytest.approx(jet[0] ** 2 / (2.0 * jet[1]), rel=1e-9)


class TestDatum:
    def test_power_datum_is_consistent(self):
        assert datum_consistency(POWER, DATUM, [0.5, 1.0, 2.0]) < 1e-10

    def test_mismatched_datum_rejected(self):
        with pytest.raises(InvalidModelError):
            datum_consistency(POWER, InitialUtility.power(3.0), [0.5, 1.0, 2.0])

    def test_datum_from_measure(self):
        v0 = InitialUtility.from_widder(POWER, x_ref=1.0, v_ref=-4.0)
        assert v0(2.0) == pytest.approx(-2.0, rel=1e-8)
        assert datum_derivative(v0, 2.0, 2) == pytest.approx(-8.0 / 8.0, rel=1e-8)

    def test_mixed_datum_is_consistent(self):
        assert MIXED_DATUM(1.0) == 0.0
        assert datum_consistency(MIXED, MIXED_DATUM, [0.5, 1.0, 2.0, 4.0]) < 1e-8
        MIXED_DATUM.check_shape([0.25, 0.5, 1.0, 2.0, 4.0])

    def test_finite_difference_fallback(self):
        v0 = InitialUtility(value_at=lambda x: -4.0 / x)
        assert datum_derivative(v0, 2.0, 1) == pytest.approx(1.0, rel=1e-8)

    def test_convex_datum_rejected(self):
        with pytest.raises(InvalidModelError):
            InitialUtility(value_at=lambda x: x * x).check_shape([0.5, 1.0, 1.5, 2.0])
