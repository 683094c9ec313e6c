"""Mesh construction and Galerkin assembly against independent oracles."""

import numpy as np
import pytest
from scipy.integrate import dblquad, quad

import fraclab.assembly as asm_mod
from fraclab.assembly import (
    assemble_full_gagliardo,
    assemble_regional_halfop,
    assemble_weighted_forms,
    gagliardo_raw_matrix,
    gagliardo_seminorm,
    mass_matrix,
    matrix_to_rows,
    tail_matrix,
)
from fraclab.errors import DomainError, QuadratureError, SupportViolationError
from fraclab.kernels import DomainGeometry, frac_constant
from fraclab.mesh import CoefficientField, build_mesh, interior_rule
from fraclab.util import make_rng


class TestBuildMesh:
    def test_counts_coarse(self, geom):
        mesh = build_mesh(geom, 0.5)
        assert mesh.n_nodes == 17
        assert mesh.node_index(-1.0) == 6
        assert mesh.node_index(1.0) == 10

    def test_counts_fine(self, geom):
        assert build_mesh(geom, 2.0 ** -6).n_nodes == 513

    def test_rejects_coarse_interval(self, geom):
        with pytest.raises(DomainError):
            build_mesh(geom, 0.6)

    def test_adjusts_h_downward(self, geom):
        mesh = build_mesh(geom, 0.3)
        assert mesh.h <= 0.3 + 1e-12
        assert np.allclose(np.diff(mesh.nodes), mesh.h)

    def test_incommensurable_segments(self):
        geom = DomainGeometry(-1.0, 1.0, 1.0 + np.sqrt(2.0))
        with pytest.raises(DomainError):
            build_mesh(geom, 0.25)

    def test_masks_partition(self, mesh16):
        interior = mesh16.interior_mask
        omega = mesh16.omega_mask
        exterior = mesh16.exterior_mask
        assert not np.any(interior & exterior)
        assert np.all(interior | ~omega | mesh16.boundary_mask)
        assert not exterior[0] and not exterior[-1]


class TestFullGagliardo:
    def test_symmetry_exact(self, mesh16):
        A = assemble_full_gagliardo(mesh16, 0.7)
        assert np.max(np.abs(A - A.T)) == 0.0

    def test_raw_form_annihilates_constants(self, mesh16):
        raw = gagliardo_raw_matrix(mesh16.n_elements, mesh16.h, 0.7)
        ones = np.ones(mesh16.n_nodes)
        assert abs(ones @ raw @ ones) <= 1e-8 * np.max(np.abs(raw))

    def test_ones_form_equals_tail_part(self, mesh16):
        # on the all-ones vector the double-integral part cancels, leaving the
        # pure tail contribution (end entries finite below order one half)
        t = 0.3
        raw = gagliardo_raw_matrix(mesh16.n_elements, mesh16.h, t)
        T = tail_matrix(mesh16, t, frac_constant(t), skip_pinned=False)
        A = 0.5 * frac_constant(t) * raw + T
        ones = np.ones(mesh16.n_nodes)
        assert ones @ A @ ones == pytest.approx(ones @ T @ ones, rel=1e-8)

    def test_positive_definite_on_interior(self, mesh16):
        A = assemble_full_gagliardo(mesh16, 0.7)
        idx = np.flatnonzero(mesh16.interior_mask)
        ev = np.linalg.eigvalsh(A[np.ix_(idx, idx)])
        assert ev[0] > 0

    def test_fitted_l2_coercivity(self, mesh16):
        A = assemble_full_gagliardo(mesh16, 0.7)
        M = mass_matrix(mesh16.n_elements, mesh16.h)
        idx = np.flatnonzero(mesh16.interior_mask)
        rng = make_rng(3)
        ratios = []
        for _ in range(100):
            v = np.zeros(mesh16.n_nodes)
            v[idx] = rng.standard_normal(len(idx))
            ratios.append((v @ A @ v) / (v @ M @ v))
        assert min(ratios) > 0

    def test_diag_matches_bruteforce(self, geom):
        # 2-D adaptive quadrature of the hat's full-space form at order one half
        mesh = build_mesh(geom, 2.0 ** -4)
        t = 0.5
        A = assemble_full_gagliardo(mesh, t)
        i = mesh.node_index(0.0)
        p, h = mesh.nodes[i], mesh.h
        c = frac_constant(t)
        hat = lambda x: max(0.0, 1.0 - abs(x - p) / h)
        inner, _ = dblquad(
            lambda y, x: 0.5 * c * (hat(x) - hat(y)) ** 2 * abs(x - y) ** (-2.0)
            if x != y else 0.0,
            p - h, p + h, lambda x: p - h, lambda x: p + h,
            epsabs=1e-10, epsrel=1e-8)
        outer, _ = quad(
            lambda x: c * hat(x) ** 2 * ((x - p + h) ** (-1.0) + (p + h - x) ** (-1.0)),
            p - h, p + h, points=[p], epsabs=1e-12)
        assert A[i, i] == pytest.approx(inner + outer, rel=1e-4)

    def test_adjacent_block_matches_bruteforce(self):
        # one touching element pair integrated by brute force at a small order
        a = 0.3
        t0, t1, _ = asm_mod._reference_blocks(a, 1)
        gamma = 1.0 + 2.0 * a

        def shape_diffs(xi, zeta):
            return (1.0 - xi, xi + zeta - 1.0, -zeta)

        for r, c in ((0, 0), (0, 1), (1, 1), (2, 0)):
            oracle, _ = dblquad(
                lambda zeta, xi: shape_diffs(xi, zeta)[r] * shape_diffs(xi, zeta)[c]
                * (1.0 + zeta - xi) ** (-gamma),
                0.0, 1.0, lambda x: 0.0, lambda x: 1.0, epsabs=1e-11, epsrel=1e-9)
            assert t1[r, c] == pytest.approx(oracle, rel=1e-6, abs=1e-10)

    def test_refinement_gate_raises(self):
        asm_mod._reference_blocks.cache_clear()
        old = asm_mod._REFINE_TOL
        asm_mod._REFINE_TOL = 1e-30
        try:
            with pytest.raises(QuadratureError):
                asm_mod._reference_blocks(0.31, 8)
        finally:
            asm_mod._REFINE_TOL = old
            asm_mod._reference_blocks.cache_clear()


class TestRegionalHalfOp:
    def test_ones_reproduce_indicator(self, mesh32):
        R = assemble_regional_halfop(mesh32, 0.2)
        v = R @ np.ones(R.shape[1])
        assert np.max(np.abs(v)) <= 1e-8

    @pytest.mark.parametrize("s_half", [0.15, 0.3, 0.45])
    def test_identity_against_direct_quadrature(self, mesh32, s_half):
        from fraclab.quadrature import hat_segments, regional_pl_quad

        rule = interior_rule(mesh32)
        R = assemble_regional_halfop(mesh32, s_half, rule)
        const = frac_constant(s_half)
        i_lo = mesh32.node_index(-1.0)
        col = mesh32.node_index(0.25) - i_lo
        seg = hat_segments(0.25, mesh32.h)
        for k in range(0, len(rule.points), 23):
            direct = regional_pl_quad(seg, float(rule.points[k]), s_half, const, -1.0, 1.0)
            assert abs(direct - R[k, col]) <= 1e-6

    def test_borderline_order_warns(self, mesh16):
        with pytest.warns(UserWarning, match="borderline"):
            assemble_regional_halfop(mesh16, 0.5)

    def test_quad_rule_keeps_collar_distance(self, mesh32):
        rule = interior_rule(mesh32)
        dist = np.minimum(rule.points + 1.0, 1.0 - rule.points)
        assert np.min(dist) >= mesh32.h / 10.0 - 1e-12


class TestWeightedForms:
    def test_zero_b_gives_zero_matrix(self, asm32, q_field, coef_edges):
        b0 = CoefficientField(edges=coef_edges, values=np.zeros(4), name="b")
        Kb, _, _ = assemble_weighted_forms(asm32, b0, q_field)
        assert np.max(np.abs(Kb)) == 0.0

    def test_unit_q_matches_mass_on_covered_block(self, asm32, mesh32, coef_edges):
        # q = 1 on the admissible support: weighted mass equals the plain mass
        # for every basis pair whose elements the support covers
        b0 = CoefficientField(edges=coef_edges, values=np.zeros(4), name="b")
        q1 = CoefficientField(edges=np.array([-0.75, 0.75]), values=np.array([1.0]), name="q")
        _, Mq, M = assemble_weighted_forms(asm32, b0, q1)
        nodes = mesh32.nodes[asm32.omega_slice]
        covered = (nodes >= -0.75 + mesh32.h - 1e-12) & (nodes <= 0.75 - mesh32.h + 1e-12)
        idx = np.flatnonzero(covered)
        assert np.allclose(Mq[np.ix_(idx, idx)], M[np.ix_(idx, idx)], rtol=0, atol=1e-15)

    def test_quadratic_form_matches_independent_quadrature(self, mesh32, coef_edges):
        # v^T Kb v against per-element adaptive quadrature; images of rough dof
        # vectors carry |x - node|^(1-s) cusps, so the cusp-graded rule is used
        from fraclab.assembly import NonlocalAssembly
        from fraclab.kernels import tail_potential
        from fraclab.quadrature import frac_pl_kink_sum, slope_jumps_from_dofs

        rule = interior_rule(mesh32, n_gauss=4, graded_levels=12)
        i_lo = mesh32.node_index(-1.0)
        i_hi = mesh32.node_index(1.0)
        asm = NonlocalAssembly(
            mesh=mesh32, t=0.7, s=0.4, K_full=np.zeros((mesh32.n_nodes,) * 2),
            M_box=mass_matrix(mesh32.n_elements, mesh32.h),
            M_omega=mass_matrix(i_hi - i_lo, mesh32.h), rule=rule)
        b1 = CoefficientField(edges=np.array([-0.5, 0.5]), values=np.array([1.0]), name="b")
        q0 = CoefficientField(edges=coef_edges, values=np.zeros(4), name="q")
        Kb, _, _ = assemble_weighted_forms(asm, b1, q0)
        sl = asm.omega_slice
        rng = make_rng(11)
        v = np.zeros(sl.stop - sl.start)
        v[1:-1] = rng.standard_normal(len(v) - 2)
        lhs = v @ Kb @ v

        s_half = 0.5 * asm.s
        const = frac_constant(s_half)
        nodes = mesh32.nodes[sl]
        jumps = slope_jumps_from_dofs(nodes, v, mesh32.h)

        def rv_sq(x):
            x = np.atleast_1d(x)
            rv = frac_pl_kink_sum(nodes, jumps, x, s_half, const) - \
                np.asarray(tail_potential(s_half, asm.mesh.geom, x)) * np.interp(x, nodes, v)
            return rv ** 2

        total = 0.0
        for e in range(mesh32.node_index(-0.5), mesh32.node_index(0.5)):
            val, _ = quad(lambda x: float(rv_sq(x)[0]), mesh32.nodes[e], mesh32.nodes[e + 1],
                          epsabs=1e-13, epsrel=1e-11, limit=100)
            total += val
        assert lhs == pytest.approx(total, rel=1e-6)

    def test_support_violation_raises(self, asm32):
        bad = CoefficientField(edges=np.array([-0.99, 0.0]), values=np.array([1.0]), name="b")
        q0 = CoefficientField(edges=np.array([-0.5, 0.5]), values=np.array([0.0]), name="q")
        with pytest.raises(SupportViolationError):
            assemble_weighted_forms(asm32, bad, q0)


class TestFunctionalInequalities:
    def test_hardy_ratio_bounded(self, mesh32):
        # distance-weighted mass against L2 plus the interval seminorm, s != 1/2
        s = 0.6
        raw = gagliardo_raw_matrix(
            mesh32.node_index(1.0) - mesh32.node_index(-1.0), mesh32.h, s)
        M = mass_matrix(mesh32.node_index(1.0) - mesh32.node_index(-1.0), mesh32.h)
        rule = interior_rule(mesh32)
        nodes = mesh32.nodes[mesh32.node_index(-1.0):mesh32.node_index(1.0) + 1]
        dist = np.minimum(rule.points + 1.0, 1.0 - rule.points)
        rng = make_rng(8)
        ratios = []
        for _ in range(40):
            v = np.zeros(len(nodes))
            v[2:-2] = rng.standard_normal(len(nodes) - 4)
            vq = np.interp(rule.points, nodes, v)
            weighted = float(np.sum(rule.weights * vq ** 2 * dist ** (-2.0 * s)))
            ratios.append(weighted / (v @ M @ v + v @ raw @ v))
        assert np.isfinite(max(ratios))
        assert max(ratios) < 50.0

    def test_poincare_wirtinger_fitted_constant(self, mesh32):
        a = 0.4
        n_el = mesh32.node_index(1.0) - mesh32.node_index(-1.0)
        raw = gagliardo_raw_matrix(n_el, mesh32.h, a)
        M = mass_matrix(n_el, mesh32.h)
        rng = make_rng(12)
        consts = []
        for _ in range(40):
            v = rng.standard_normal(n_el + 1)
            mean = (M @ v).sum() / 2.0  # interval length 2
            vc = v - mean
            consts.append(np.sqrt((vc @ M @ vc) / (v @ raw @ v)))
        fitted_c = max(consts)
        assert np.isfinite(fitted_c) and fitted_c < 10.0


class TestSeminormAndExport:
    def test_constant_has_zero_interval_seminorm(self, mesh16):
        dofs = np.zeros(mesh16.n_nodes)
        dofs[mesh16.omega_mask] = 3.0
        assert gagliardo_seminorm(mesh16, dofs, 0.4, region="omega") <= 1e-7

    def test_full_dominates_interval(self, mesh16):
        dofs = np.zeros(mesh16.n_nodes)
        dofs[mesh16.node_index(0.0)] = 1.0
        full = gagliardo_seminorm(mesh16, dofs, 0.5, region="full")
        omega = gagliardo_seminorm(mesh16, dofs, 0.5, region="omega")
        assert full >= omega

    def test_hat_seminorm_vs_bruteforce(self, mesh16):
        dofs = np.zeros(mesh16.n_nodes)
        i = mesh16.node_index(0.0)
        dofs[i] = 1.0
        p, h = mesh16.nodes[i], mesh16.h
        hat = lambda x: max(0.0, 1.0 - abs(x - p) / h)
        inner, _ = dblquad(
            lambda y, x: (hat(x) - hat(y)) ** 2 * abs(x - y) ** (-2.0) if x != y else 0.0,
            -1.0, 1.0, lambda x: -1.0, lambda x: 1.0, epsabs=1e-9, epsrel=1e-7)
        assert gagliardo_seminorm(mesh16, dofs, 0.5, region="omega") ** 2 == pytest.approx(
            inner, rel=1e-4)

    def test_mass_matrix_integrates_linears(self):
        M = mass_matrix(4, 0.5)
        vals = np.linspace(0.0, 2.0, 5)
        assert vals @ M @ np.ones(5) == pytest.approx(2.0, rel=1e-14)  # int of x on [0,2]

    def test_matrix_row_export(self):
        A = np.array([[1.0, 0.0], [0.5, 2.0]])
        rows = list(matrix_to_rows(A))
        assert rows == [(0, 0, 1.0), (1, 0, 0.5), (1, 1, 2.0)]
