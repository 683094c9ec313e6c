"""Integration primitives: moments, segment tables, and the pointwise operators."""

import numpy as np
import pytest
from scipy.integrate import quad

from fraclab.errors import SingularInputError
from fraclab.kernels import frac_constant
from fraclab.quadrature import (
    frac_pl_exact,
    frac_pl_kink_sum,
    gauss_panel,
    graded_rule,
    halfhat_segments,
    hat_segments,
    power_moments,
    regional_pl_quad,
    segments_from_dofs,
)


class TestRulesAndMoments:
    def test_gauss_panel_polynomial(self):
        x, w = gauss_panel(0.25, 1.75, 6)
        assert np.sum(w * x ** 7) == pytest.approx((1.75 ** 8 - 0.25 ** 8) / 8.0, rel=1e-13)

    def test_graded_rule_covers_interval(self):
        x, w = graded_rule(0.0, 2.0, 8, toward_left=True, levels=30)
        assert np.sum(w) == pytest.approx(2.0, rel=1e-13)
        x2, w2 = graded_rule(0.0, 2.0, 8, toward_left=False, levels=30)
        assert np.sum(w2) == pytest.approx(2.0, rel=1e-13)
        assert np.all(np.diff(x) > 0) and np.all(np.diff(x2) > 0)

    @pytest.mark.parametrize("gamma", [1.6, 2.0, 2.9])
    def test_power_moments_vs_quadrature(self, gamma):
        mom = power_moments(np.array([0.3]), np.array([1.7]), gamma, 2)
        for m in range(3):
            oracle, _ = quad(lambda z, m=m: z ** (m - gamma), 0.3, 1.7, epsabs=1e-14)
            assert mom[m][0] == pytest.approx(oracle, rel=1e-12)


class TestSegments:
    def test_hat_eval(self):
        seg = hat_segments(0.0, 0.5)
        assert seg(0.0) == pytest.approx(1.0)
        assert seg(0.25) == pytest.approx(0.5)
        assert seg(-0.6) == 0.0 and seg(0.6) == 0.0

    def test_halfhat_jump(self):
        seg = halfhat_segments(0.0, 0.5, rising=False)
        assert seg(-0.01) == 0.0
        assert seg(0.01) == pytest.approx(0.98)
        assert seg(0.49) == pytest.approx(0.02)
        assert seg(0.51) == 0.0

    def test_from_dofs(self):
        nodes = np.linspace(-1, 1, 5)
        dofs = np.array([0.0, 1.0, -1.0, 2.0, 0.0])
        seg = segments_from_dofs(nodes, dofs)
        assert seg(-0.75) == pytest.approx(0.5)
        assert seg(0.25) == pytest.approx(0.5)


class TestPointwiseOperators:
    @pytest.mark.parametrize("a", [0.2, 0.35, 0.5, 0.7])
    def test_exact_matches_kink_sum_on_hat(self, a):
        # two independent implementations of the same closed evaluation
        h = 0.25
        seg = hat_segments(0.0, h)
        const = frac_constant(a)
        kinks = np.array([-h, 0.0, h])
        jumps = np.array([1.0 / h, -2.0 / h, 1.0 / h])
        for x in (-0.9, -0.3, 0.11, 0.61, 2.3):
            v1 = frac_pl_exact(seg, x, a, const)
            v2 = frac_pl_kink_sum(kinks, jumps, np.array([x]), a, const)[0]
            assert v1 == pytest.approx(v2, rel=1e-11, abs=1e-13)

    def test_exact_on_jump_function_vs_quadrature(self):
        # half hat with a jump: compare against brute-force adaptive quadrature
        a = 0.2
        h = 0.5
        seg = halfhat_segments(0.0, h, rising=False)
        const = frac_constant(a)
        x = 0.2

        def integrand(z):
            return (2.0 * seg(x) - seg(x + z) - seg(x - z)) * z ** (-1.0 - 2.0 * a)

        zmax = 10.0
        pts = sorted({abs(x - b) for b in (0.0, 0.5)})
        oracle, _ = quad(integrand, 1e-13, zmax, points=pts, limit=300, epsabs=1e-12)
        oracle += 2.0 * seg(x) * zmax ** (-2.0 * a) / (2.0 * a)
        assert frac_pl_exact(seg, x, a, const) == pytest.approx(const * oracle, rel=1e-8)

    def test_kink_evaluation_rejected(self):
        seg = hat_segments(0.0, 0.5)
        with pytest.raises(SingularInputError):
            frac_pl_exact(seg, 0.5, 0.3, 1.0)

    @pytest.mark.parametrize("a", [0.15, 0.3, 0.45])
    def test_regional_route_agrees_with_subtraction(self, a):
        # identity: region-restricted value = full-space value - tail potential * u
        from fraclab.kernels import DomainGeometry, tail_potential

        geom = DomainGeometry(-1.0, 1.0, 4.0)
        h = 2.0 ** -4
        seg = hat_segments(-0.25, h)
        const = frac_constant(a)
        for x in (-0.71, -0.26, 0.33, 0.87):
            direct = regional_pl_quad(seg, x, a, const, -1.0, 1.0)
            subtraction = frac_pl_exact(seg, x, a, const) - \
                float(tail_potential(a, geom, x)) * seg(x)
            assert direct == pytest.approx(subtraction, abs=1e-9)

    def test_log_branch_consistency(self):
        # a = 1/2 takes the logarithmic antiderivatives in both routes
        h = 0.25
        seg = hat_segments(0.0, h)
        const = frac_constant(0.5)
        kinks = np.array([-h, 0.0, h])
        jumps = np.array([1.0 / h, -2.0 / h, 1.0 / h])
        for x in (0.4, 1.3):
            v1 = frac_pl_exact(seg, x, 0.5, const)
            v2 = frac_pl_kink_sum(kinks, jumps, np.array([x]), 0.5, const)[0]
            assert v1 == pytest.approx(v2, rel=1e-11)
