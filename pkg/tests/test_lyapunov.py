"""Lyapunov equation solutions and dissipation certification."""

import math

import numpy as np
import pytest
import scipy.linalg

from iisslab.comparison import ComparisonFunction
from iisslab.discretization import (
    EvolutionSystem,
    build_dirichlet_laplacian,
    build_saturated_bilinearity,
)
from iisslab.lyapunov import (
    NotHurwitzError,
    certify_dissipation,
    certify_implicative,
    default_margin_tolerance,
    dissipation_rhs_bilinear,
    eval_V,
    eval_W,
    lie_derivative_fd,
    log_quadratic_evaluator,
    log_squared_norm_evaluator,
    pick_eps,
    quadratic_evaluator,
    solve_lyapunov,
    squared_norm_evaluator,
)
from iisslab.semigroup import integrate_mild, semigroup_constants


def random_symmetric_hurwitz(n, rng):
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return (Q * -rng.uniform(0.1, 10.0, n)) @ Q.T


def cf(fn, cls, hint=10.0, name=""):
    return ComparisonFunction(fn, cls, hint, name)


class TestSolveLyapunov:
    def test_scalar_case(self):
        cert = solve_lyapunov(-np.eye(3))
        np.testing.assert_allclose(cert.P, 0.5 * np.eye(3))
        assert cert.k == pytest.approx(0.5)
        assert cert.residual < 1e-14

    def test_laplacian_closed_form(self):
        sys = build_dirichlet_laplacian(50, 1.0)
        cert = solve_lyapunov(sys.A)
        w = np.linalg.eigvalsh(sys.A)
        eigP = np.sort(np.linalg.eigvalsh(cert.P))
        np.testing.assert_allclose(eigP, np.sort(0.5 / np.abs(w)), rtol=1e-10)
        assert cert.k == pytest.approx(0.5 / np.abs(w).max(), rel=1e-10)
        assert cert.residual <= 1e-10 * 50

    def test_general_path_matches_symmetric(self):
        rng = np.random.default_rng(8)
        A = random_symmetric_hurwitz(5, rng)
        sym = solve_lyapunov(A)
        # perturb symmetry below detection so the Kronecker path runs
        A_skew = A.copy()
        A_skew[0, 1] += 1e-9
        general = solve_lyapunov(A_skew)
        np.testing.assert_allclose(general.P, sym.P, atol=1e-8)

    def test_general_path_against_scipy(self):
        rng = np.random.default_rng(9)
        A = rng.standard_normal((6, 6)) - 6.0 * np.eye(6)  # diagonally dominant Hurwitz
        cert = solve_lyapunov(A)
        ref = scipy.linalg.solve_continuous_lyapunov(A.T, -np.eye(6))
        np.testing.assert_allclose(cert.P, 0.5 * (ref + ref.T), atol=1e-9)

    def test_residual_and_positivity_on_random_family(self):
        rng = np.random.default_rng(10)
        for _ in range(20):
            A = random_symmetric_hurwitz(12, rng)
            cert = solve_lyapunov(A)
            assert cert.residual <= 1e-10 * 12
            assert cert.k > 0

    def test_not_hurwitz_rejected(self):
        with pytest.raises(NotHurwitzError, match="no positive solution"):
            solve_lyapunov(np.diag([-1.0, 0.5]))

    def test_general_size_cap(self):
        A = -np.eye(201) + 1e-9 * np.triu(np.ones((201, 201)), 1)
        with pytest.raises(ValueError, match="capped"):
            solve_lyapunov(A)


class TestEvaluators:
    def test_zero_state(self):
        cert = solve_lyapunov(-np.eye(4))
        assert eval_V(cert, np.zeros(4)) == 0.0
        assert eval_W(cert, np.zeros(4)) == 0.0

    def test_unit_norm_state_with_identity_generator(self):
        cert = solve_lyapunov(-np.eye(4))
        h = 0.2
        x = np.full(4, math.sqrt(1.0 / (h * 4)))  # ||x||_h = 1
        assert eval_V(cert, x, h) == pytest.approx(0.5)
        assert eval_W(cert, x, h) == pytest.approx(math.log(1.5))

    def test_sandwich_bounds_on_random_states(self):
        rng = np.random.default_rng(11)
        A = random_symmetric_hurwitz(8, rng)
        cert = solve_lyapunov(A)
        h = 0.1
        for _ in range(1000):
            x = rng.standard_normal(8)
            V = eval_V(cert, x, h)  # raises internally if the sandwich fails
            nx2 = h * float(x @ x)
            assert cert.k * nx2 - 1e-9 <= V <= cert.normP * nx2 + 1e-9

    def test_log_form_sandwich(self):
        sys = build_dirichlet_laplacian(20, 1.0)
        cert = solve_lyapunov(sys.A)
        rng = np.random.default_rng(12)
        h = sys.grid.h
        for _ in range(100):
            x = rng.standard_normal(20)
            W = eval_W(cert, x, h)
            nx2 = h * float(x @ x)
            assert math.log1p(cert.k * nx2) - 1e-9 <= W <= math.log1p(cert.normP * nx2) + 1e-9


class TestLieDerivative:
    def test_constant_trajectory_zero(self):
        sys = build_dirichlet_laplacian(5, 1.0)
        traj = integrate_mild(sys, np.zeros(5), lambda t: np.zeros(5), 0.1, 0.01)
        V = squared_norm_evaluator(sys.grid)
        assert lie_derivative_fd(V, traj, 3) == 0.0

    def test_pure_decay_rate(self):
        grid = build_dirichlet_laplacian(6, 1.0).grid
        sys = EvolutionSystem(grid, np.full(6, -1.0))  # dx/dt = -x
        x0 = np.ones(6)
        dt = 1e-3
        traj = integrate_mild(sys, x0, lambda t: np.zeros(6), 0.1, dt)
        V = squared_norm_evaluator(sys.grid)
        fd = lie_derivative_fd(V, traj, 0)
        assert fd == pytest.approx(-2.0 * V(x0), rel=2 * dt)

    def test_refinement_halves_truncation(self):
        grid = build_dirichlet_laplacian(6, 1.0).grid
        sys = EvolutionSystem(grid, np.full(6, -1.0))
        x0 = np.ones(6)
        dt = 1e-2
        traj = integrate_mild(sys, x0, lambda t: np.zeros(6), 0.1, dt)
        V = squared_norm_evaluator(sys.grid)
        fd, fd_half = lie_derivative_fd(V, traj, 0, refine=True)
        truth = -2.0 * V(x0)
        assert abs(fd_half - truth) == pytest.approx(abs(fd - truth) / 2.0, rel=0.05)


class TestDissipationRhs:
    def setup_method(self):
        sys = build_dirichlet_laplacian(30, 1.0)
        self.cert = solve_lyapunov(sys.A)

    def test_zero_input_strictly_negative(self):
        rhs = dissipation_rhs_bilinear(self.cert, 1.0, ComparisonFunction.identity(),
                                       0.0, 1.0, x_norm=0.7, u_norm=0.0)
        assert rhs < 0

    def test_zero_state_supply_only(self):
        rhs = dissipation_rhs_bilinear(self.cert, 1.0, ComparisonFunction.identity(),
                                       0.5, pick_eps(self.cert.normP, 0.5),
                                       x_norm=0.0, u_norm=1.2)
        assert rhs >= 0

    def test_eps_window_enforced(self):
        with pytest.raises(ValueError):
            dissipation_rhs_bilinear(self.cert, 1.0, ComparisonFunction.identity(),
                                     2.0, eps=10.0 / (self.cert.normP * 2.0),
                                     x_norm=1.0, u_norm=1.0)

    def test_matches_displayed_formula(self):
        K, nb = 1.0, 0.5
        eps = pick_eps(self.cert.normP, nb)
        xn, un = 0.9, 0.4
        rhs = dissipation_rhs_bilinear(self.cert, K, ComparisonFunction.identity(),
                                       nb, eps, xn, un)
        P, k = self.cert.normP, self.cert.k
        expected = (-(1 - eps * P * nb) * xn**2 / (1 + P * xn**2)
                    + (2 * K * P / k) * un + (P * nb / eps) * un**2)
        assert rhs == pytest.approx(expected, rel=1e-12)


def heat_system_with_input(n=40):
    sys = build_dirichlet_laplacian(n, 1.0)
    return sys.with_input_operator(np.ones(n), input_norm="L2")


def random_trajectories(sys, count, rng, t_end=1.0, dt=1e-3, amplitude=1.0):
    n = sys.grid.n
    segs = 8
    out = []
    for _ in range(count):
        x0 = rng.uniform(-1, 1, n)
        levels = rng.uniform(-amplitude, amplitude, (segs, n))
        seg_len = t_end / segs

        def u(t, levels=levels, seg_len=seg_len):
            return levels[min(int(t / seg_len), segs - 1)]

        out.append(integrate_mild(sys, x0, u, t_end, dt))
    return out


class TestCertification:
    def setup_method(self):
        self.sys = heat_system_with_input()
        self.mu1 = semigroup_constants(self.sys.A)[1]
        self.rng = np.random.default_rng(13)
        self.trajs = random_trajectories(self.sys, 5, self.rng)
        self.V = squared_norm_evaluator(self.sys.grid)
        # Vdot = 2<x, Ax + u> <= -2 mu1 V + 2 ||x|| ||u||; Young with w = mu1
        self.alpha = cf(lambda s: self.mu1 * s * s, "Kinf", name="mu1*s^2")
        self.sigma = cf(lambda s: s * s / self.mu1, "Kinf", name="s^2/mu1")

    def test_dissipative_certificate_passes(self):
        report = certify_dissipation(self.V, self.alpha, self.sigma, self.trajs)
        assert report.verdict, report.witness

    def test_zero_input_log_form_decreases(self):
        W = log_squared_norm_evaluator(self.sys.grid)
        traj = integrate_mild(self.sys, np.ones(40), lambda t: np.zeros(40), 1.0, 1e-3)
        w_vals = [W(s) for s in traj.states]
        assert (np.diff(w_vals) <= 1e-9).all()

    def test_inflated_alpha_fails_with_witness(self):
        inflated = cf(lambda s: 10.0 * self.mu1 * s * s, "Kinf")
        report = certify_dissipation(self.V, inflated, self.sigma, self.trajs)
        assert not report.verdict
        assert report.witness is not None
        assert report.witness.margin < 0
        assert report.n_violations > 0

    def test_vacuous_implicative_pass(self):
        huge_gamma = cf(lambda s: 1e12 + s, "K")
        eta = cf(lambda s: s, "K")
        report = certify_implicative(self.V, eta, huge_gamma, self.trajs)
        assert report.verdict
        assert report.checked_steps == 0

    def test_implicative_from_dissipative_transformation(self):
        from iisslab.comparison import dissipative_to_implicative

        pair = dissipative_to_implicative(self.alpha, self.sigma, K_margin=2.0)
        report = certify_implicative(self.V, pair.eta, pair.gamma, self.trajs)
        assert report.verdict, report.witness

    def test_inflated_eta_fails(self):
        from iisslab.comparison import dissipative_to_implicative

        pair = dissipative_to_implicative(self.alpha, self.sigma, K_margin=2.0)
        inflated = cf(lambda s: 10.0 * pair.eta(s) + 10.0 * s * s, "K")
        report = certify_implicative(self.V, inflated, pair.gamma, self.trajs)
        assert not report.verdict

    def test_consistent_verdicts_across_forms(self):
        from iisslab.comparison import dissipative_to_implicative

        diss = certify_dissipation(self.V, self.alpha, self.sigma, self.trajs)
        pair = dissipative_to_implicative(self.alpha, self.sigma, K_margin=2.0)
        impl = certify_implicative(self.V, pair.eta, pair.gamma, self.trajs)
        assert diss.verdict == impl.verdict


class TestOperatorLogCertificateOnSaturatedSystem:
    def test_rhs_bound_holds_at_almost_all_steps(self):
        # reaction-diffusion with saturated coupling, certified through the
        # operator-P logarithmic function; forward differences may overshoot
        # at a vanishing fraction of steps
        sys = build_dirichlet_laplacian(40, 1.0)
        sys = sys.with_bilinearity(build_saturated_bilinearity(sys.grid))
        cert = solve_lyapunov(sys.A, sys.grid)
        W = log_quadratic_evaluator(cert, sys.grid.h)
        rng = np.random.default_rng(14)
        dt = 5e-4
        trajs = random_trajectories(sys, 3, rng, t_end=1.0, dt=dt, amplitude=2.0)
        eps = pick_eps(cert.normP, 0.0)
        ok = total = 0
        for traj in trajs:
            w_vals = np.array([W(s) for s in traj.states])
            wdot = np.diff(w_vals) / dt
            for k in range(traj.steps):
                rhs = dissipation_rhs_bilinear(
                    cert, 1.0, ComparisonFunction.identity(), 0.0, eps,
                    traj.state_norms[k], traj.input_norms[k])
                total += 1
                ok += wdot[k] <= rhs + default_margin_tolerance(dt, rhs)
        assert ok / total >= 0.99
