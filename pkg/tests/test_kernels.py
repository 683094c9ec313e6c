"""Kernel-level closed forms against brute-force quadrature oracles."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from fraclab.errors import DomainError, SingularInputError
from fraclab.kernels import (
    DomainGeometry,
    frac_constant,
    getoor_constant,
    getoor_profile,
    getoor_quadrature,
    m_function,
    tail_potential,
    verify_symbol,
)
from fraclab.quadrature import frac_smooth_quad


def symbol_integral(a: float) -> float:
    """int_R (1 - cos z) |z|^(-1-2a) dz by adaptive quadrature (oracle)."""
    import warnings

    from scipy.integrate import IntegrationWarning

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        inner, _ = quad(lambda z: (1.0 - np.cos(z)) * z ** (-1.0 - 2.0 * a), 0.0, 1.0,
                        epsabs=1e-14, epsrel=1e-12)
        power, _ = quad(lambda z: z ** (-1.0 - 2.0 * a), 1.0, np.inf, epsabs=1e-14)
        osc, _ = quad(lambda z: z ** (-1.0 - 2.0 * a), 1.0, np.inf, weight="cos", wvar=1.0)
    return 2.0 * (inner + power - osc)


class TestFracConstant:
    def test_half_is_one_over_pi(self):
        assert frac_constant(0.5) == pytest.approx(1.0 / math.pi, rel=1e-14)

    def test_degenerates_at_zero(self):
        assert frac_constant(1e-7) < 1e-6

    @pytest.mark.parametrize("a", [0.25, 0.4, 0.75])
    def test_matches_symbol_integral(self, a):
        assert frac_constant(a) == pytest.approx(1.0 / symbol_integral(a), rel=1e-8)

    def test_positive_on_grid(self):
        for a in np.linspace(0.05, 0.95, 19):
            assert frac_constant(float(a)) > 0.0

    @pytest.mark.parametrize("a", [0.0, 1.0, -0.3, 1.7])
    def test_rejects_bad_order(self, a):
        with pytest.raises(DomainError):
            frac_constant(a)


class TestTailPotential:
    def test_symmetric_point_half(self, geom):
        assert tail_potential(0.5, geom, 0.0) == pytest.approx(2.0 / math.pi, rel=1e-14)

    def test_blowup_rate(self, geom):
        a = 0.4
        x = 1.0 - 1e-7
        lead = frac_constant(a) / (2.0 * a)
        assert tail_potential(a, geom, x) * (1.0 - x) ** (2.0 * a) == pytest.approx(
            lead, rel=1e-4)

    def test_against_quadrature(self, geom):
        a, x = 0.3, 0.5
        right, _ = quad(lambda y: (y - x) ** (-1.0 - 2.0 * a), 1.0, np.inf, epsabs=1e-14)
        left, _ = quad(lambda y: (x - y) ** (-1.0 - 2.0 * a), -np.inf, -1.0, epsabs=1e-14)
        oracle = frac_constant(a) * (right + left)
        assert tail_potential(a, geom, x) == pytest.approx(oracle, rel=1e-10)

    def test_monotone_toward_boundary(self, geom):
        xs = np.linspace(0.0, 0.95, 40)
        vals = tail_potential(0.6, geom, xs)
        assert np.all(np.diff(vals) > 0)

    def test_two_sided_distance_bounds(self, geom):
        # one moderate constant C must give 1/C <= phi * dist^(2a) <= C on a grid
        a = 0.35
        xs = np.linspace(-0.95, 0.95, 61)
        vals = np.asarray(tail_potential(a, geom, xs))
        dist = np.minimum(1.0 - xs, xs + 1.0)
        ratio = vals * dist ** (2.0 * a)
        fitted_c = 1.05 * max(float(np.max(ratio)), 1.0 / float(np.min(ratio)))
        assert fitted_c < 10.0
        assert np.all(vals <= fitted_c * dist ** (-2.0 * a))
        assert np.all(vals >= dist ** (-2.0 * a) / fitted_c)

    def test_boundary_is_singular(self, geom):
        with pytest.raises(SingularInputError):
            tail_potential(0.5, geom, 1.0)


class TestMFunction:
    def test_decays_at_infinity(self, geom):
        assert m_function(0.6, geom, 1e6) < 1e-6

    def test_half_closed_form(self, geom):
        assert m_function(0.5, geom, 2.0) == pytest.approx(2.0 / (3.0 * math.pi), rel=1e-14)

    def test_against_quadrature(self, geom):
        t, x = 0.7, 1.5
        oracle, _ = quad(lambda y: abs(x - y) ** (-1.0 - 2.0 * t), -1.0, 1.0, epsabs=1e-14)
        assert m_function(t, geom, x) == pytest.approx(frac_constant(t) * oracle, rel=1e-10)

    def test_mirror_side(self, geom):
        assert m_function(0.7, geom, -1.5) == pytest.approx(
            m_function(0.7, geom, 1.5), rel=1e-14)

    def test_monotone_away(self, geom):
        xs = np.linspace(1.1, 4.0, 50)
        vals = m_function(0.6, geom, xs)
        assert np.all(np.diff(vals) < 0)

    def test_inside_is_singular(self, geom):
        with pytest.raises(SingularInputError):
            m_function(0.5, geom, 0.3)


class TestVerifySymbol:
    @pytest.mark.parametrize("a", [0.25, 0.4, 0.5, 0.6, 0.75])
    def test_passes(self, a):
        assert verify_symbol(a, tol=1e-4).passed

    def test_doubled_constant_fails(self):
        rep = verify_symbol(0.5, tol=1e-4, constant=2.0 * frac_constant(0.5))
        assert not rep.passed
        assert rep.max_rel_discrepancy == pytest.approx(1.0, abs=1e-3)


class TestGetoor:
    def test_half_order_unit_constant(self):
        assert getoor_constant(0.5) == pytest.approx(1.0, rel=1e-14)
        for x in (0.0, 0.5, -0.5):
            assert getoor_quadrature(0.5, x) == pytest.approx(1.0, rel=1e-6)

    def test_constancy_across_points(self):
        vals = [getoor_quadrature(0.75, x) for x in (0.0, 0.9)]
        assert vals[0] == pytest.approx(vals[1], rel=1e-5)
        grid = [getoor_quadrature(0.7, x) for x in (-0.8, -0.3, 0.0, 0.4, 0.85)]
        assert np.max(grid) - np.min(grid) <= 1e-5 * abs(np.mean(grid))
        assert np.mean(grid) == pytest.approx(getoor_constant(0.7), rel=1e-6)

    def test_profile_vanishes_outside(self):
        assert getoor_profile(1.5, 0.6) == 0.0
        assert getoor_profile(-2.0, 0.6) == 0.0

    def test_support_extension_invariance(self):
        # zero extension: widening the declared support cannot change the value
        t, x = 0.6, 0.2
        f = lambda y: getoor_profile(y, t)
        c = frac_constant(t)
        tight = frac_smooth_quad(f, x, t, c, support=(-1.0, 1.0), kinks=(-1.0, 1.0))
        wide = frac_smooth_quad(f, x, t, c, support=(-2.0, 2.0), kinks=(-1.0, 1.0))
        assert tight == pytest.approx(wide, rel=1e-8)


class TestGeometry:
    def test_rejects_flipped_interval(self):
        with pytest.raises(DomainError):
            DomainGeometry(1.0, -1.0, 4.0)

    def test_rejects_tight_radius(self):
        with pytest.raises(DomainError):
            DomainGeometry(-1.0, 1.0, 0.5)
