"""Grids, the Dirichlet Laplacian, norms and the model operators."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from iisslab.discretization import (
    Grid1D,
    GridFunction,
    build_dirichlet_laplacian,
    build_hat_input,
    build_multiplicative_bilinearity,
    build_saturated_bilinearity,
    build_tan_input_operator,
    check_bilinear_bound,
    laplacian_eigenvalues,
    norm,
    operator_norm,
    tan_half_power_integral,
)

PI_HALF = math.pi / 2


class TestGrid:
    def test_nodes_interior_and_spacing(self):
        g = Grid1D(5, 3.0)
        assert g.h == pytest.approx(0.5)
        assert np.all(g.nodes > 0) and np.all(g.nodes < 3.0)
        assert g.h * (g.n + 1) == pytest.approx(g.L, rel=1e-15)

    def test_grid_function_validation(self):
        g = Grid1D(4, 1.0)
        with pytest.raises(ValueError):
            GridFunction(g, np.ones(3))
        with pytest.raises(ValueError):
            GridFunction(g, np.array([1.0, np.inf, 0.0, 0.0]))


class TestLaplacian:
    def test_unit_spacing_entries(self):
        sys = build_dirichlet_laplacian(3, 4.0, c=0.0, diffusivity=1.0)
        assert sys.grid.h == pytest.approx(1.0)
        expected = np.array([[-2.0, 1.0, 0.0], [1.0, -2.0, 1.0], [0.0, 1.0, -2.0]])
        np.testing.assert_allclose(sys.A, expected)

    def test_eigenvalues_match_dense_solver(self):
        sys = build_dirichlet_laplacian(40, 2.0, c=0.3, diffusivity=0.7)
        computed = np.sort(np.linalg.eigvalsh(sys.A))
        closed = np.sort(laplacian_eigenvalues(40, 2.0, c=0.3, diffusivity=0.7))
        np.testing.assert_allclose(computed, closed, atol=1e-10 * np.abs(closed).max())

    def test_principal_eigenvalue_approaches_continuum(self):
        for L, diff in ((1.0, 1.0), (2.0, 0.5)):
            sys = build_dirichlet_laplacian(200, L, diffusivity=diff)
            mu1 = -np.max(np.linalg.eigvalsh(sys.A))
            continuum = diff * (math.pi / L) ** 2
            assert mu1 == pytest.approx(continuum, rel=0.01)

    def test_richardson_ratio_under_halved_spacing(self):
        n = 50
        target = (math.pi / 1.0) ** 2
        mu_coarse = -laplacian_eigenvalues(n, 1.0).max()
        mu_fine = -laplacian_eigenvalues(2 * n + 1, 1.0).max()
        ratio = (target - mu_coarse) / (target - mu_fine)
        assert 3.5 < ratio < 4.5

    def test_discrete_poincare_inequality(self):
        sys = build_dirichlet_laplacian(60, 1.5, diffusivity=2.0)
        mu1 = -np.max(np.linalg.eigvalsh(sys.A))
        h = sys.grid.h
        rng = np.random.default_rng(3)
        for _ in range(50):
            x = rng.standard_normal(60)
            lhs = -h * float(x @ (sys.A @ x))
            assert lhs >= mu1 * h * float(x @ x) - 1e-9 * abs(lhs)

    def test_deterministic_construction(self):
        a = build_dirichlet_laplacian(30, 1.0, c=1.0).A
        b = build_dirichlet_laplacian(30, 1.0, c=1.0).A
        assert np.array_equal(a, b)

    def test_precondition_floor(self):
        with pytest.raises(ValueError):
            build_dirichlet_laplacian(2, 1.0)


class TestNorms:
    def test_constant_function_l2(self):
        g = Grid1D(100, 1.0)
        val = norm(np.ones(100), "L2", g.h)
        assert val == pytest.approx(math.sqrt(g.h * 100))

    def test_sine_mode_l2_matches_integral(self):
        g = Grid1D(100, 1.0)
        x = np.sin(math.pi * g.nodes)
        # int_0^1 sin^2(pi l) dl = 1/2
        assert norm(x, "L2", g.h) == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-3)

    def test_zero_for_all_tags(self):
        g = Grid1D(10, 1.0)
        for tag in ("L2", "L4", "sup"):
            assert norm(np.zeros(10), tag, g.h) == 0.0

    def test_unknown_tag_rejected(self):
        with pytest.raises(ValueError):
            norm(np.ones(4), "L3", 0.1)

    @given(arrays(np.float64, 16, elements=st.floats(-100, 100)),
           st.floats(min_value=-10, max_value=10))
    @settings(max_examples=60, deadline=None)
    def test_homogeneity(self, vals, scale):
        h = 0.05
        for tag in ("L2", "L4", "sup"):
            assert norm(scale * vals, tag, h) == pytest.approx(
                abs(scale) * norm(vals, tag, h), rel=1e-9, abs=1e-9)


class TestTanOperator:
    def test_node_at_quarter_pi_has_unit_entry(self):
        g = Grid1D(3, PI_HALF)
        B = build_tan_input_operator(g)
        assert B[1] == pytest.approx(1.0)  # node 2h = pi/4

    def test_rejects_other_intervals(self):
        with pytest.raises(ValueError):
            build_tan_input_operator(Grid1D(10, 1.0))

    def test_weighted_hat_input_peaks_at_bc(self):
        # a node must fall beyond arctan(c^8) for the discrete sup to reach bc
        b, c = 1.0, 2.0
        n = 450
        g = Grid1D(n, PI_HALF)
        assert g.nodes[-1] >= math.atan(c**8)
        B = build_tan_input_operator(g)
        hat = build_hat_input(g, b, c)
        assert norm(B * hat.values, "sup", g.h) == pytest.approx(b * c, rel=1e-12)

    def test_hat_input_profile_and_sup_norm(self):
        g = Grid1D(200, PI_HALF)
        hat = build_hat_input(g, 1.0, 1.0)
        brk = math.atan(1.0)  # pi/4
        left = g.nodes < brk
        np.testing.assert_allclose(hat.values[left], 1.0)
        # for c >= 1 the plateau of height b spans at least (0, pi/4), so any
        # grid resolves the sup norm; c < 1 would need nodes below arctan(c^8)
        for c in (1.0, 2.0, 3.0):
            assert norm(build_hat_input(g, 2.0, c).values, "sup", g.h) == pytest.approx(2.0)

    def test_operator_norm_of_diagonal(self):
        assert operator_norm(np.array([0.5, -2.0, 1.0]), "L2", "L2") == 2.0
        with pytest.raises(ValueError):
            operator_norm(np.array([1.0]), "L4", "L2")


class TestBilinearities:
    def test_saturated_zero_state(self):
        g = Grid1D(20, 2.0)
        bm = build_saturated_bilinearity(g)
        np.testing.assert_array_equal(bm.fn(np.zeros(20), np.ones(20)), np.zeros(20))

    def test_saturated_unweighted_at_node_one(self):
        g = Grid1D(199, 2.0)  # h = 0.01, node index 99 sits at l = 1
        i = 99
        assert g.nodes[i] == pytest.approx(1.0)
        bm = build_saturated_bilinearity(g)
        x = np.full(199, 3.0)
        u = np.full(199, 2.0)
        assert bm.fn(x, u)[i] == pytest.approx(6.0)

    def test_saturated_pointwise_envelope(self):
        # sup_s |s / (1 + w s^2)| = 1/(2 sqrt(w)) for w = |l - 1| > 0
        g = Grid1D(50, 0.9)
        bm = build_saturated_bilinearity(g)
        w = np.abs(g.nodes - 1.0)
        rng = np.random.default_rng(5)
        for _ in range(200):
            x = rng.uniform(-50, 50, 50)
            vals = np.abs(bm.fn(x, np.ones(50)))
            np.testing.assert_array_less(vals, 1.0 / (2.0 * np.sqrt(w)) + 1e-12)

    def test_multiplicative_constant_input_scales_state(self):
        g = Grid1D(15, 1.0)
        bm = build_multiplicative_bilinearity(g)
        x = np.linspace(-1, 1, 15)
        np.testing.assert_allclose(bm.fn(x, np.full(15, 2.5)), 2.5 * x)

    def test_multiplicative_bound_tight_for_constant_fields(self):
        g = Grid1D(30, 1.0)
        bm = build_multiplicative_bilinearity(g)
        x = np.full(30, 1.7)
        u = np.full(30, -0.6)
        lhs = norm(bm.fn(x, u), "L2", g.h)
        rhs = bm.bound_const * norm(x, "L2", g.h) * bm.xi(norm(u, "sup", g.h))
        assert lhs == pytest.approx(rhs, rel=1e-12)

    @pytest.mark.parametrize("builder", [build_saturated_bilinearity,
                                         build_multiplicative_bilinearity])
    def test_growth_certificate_thousand_samples(self, builder):
        g = Grid1D(40, 2.0)
        worst = check_bilinear_bound(g, builder(g), samples=1000,
                                     rng=np.random.default_rng(17))
        assert worst <= 1.0 + 1e-12


class TestSingularQuadrature:
    def test_half_power_tangent_integral(self):
        # analytic value: int_0^{pi/2} tan^{1/2} = pi / sqrt(2)
        assert tan_half_power_integral() == pytest.approx(math.pi / math.sqrt(2.0),
                                                          abs=1e-6)

    def test_discrete_quadrature_stays_below_integral(self):
        for n in (50, 200, 1000):
            g = Grid1D(n, PI_HALF)
            discrete = g.h * float(np.sum(np.sqrt(np.tan(g.nodes))))
            assert discrete <= math.pi / math.sqrt(2.0)
