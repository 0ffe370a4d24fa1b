import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lqtbench import (
    Direction,
    ReferenceSignal,
    SignalAccess,
    TimeGrid,
    algebraic_roots,
    closed_form_theta,
    feedforward_forward,
    kinetic_embedding,
    lift_scalar,
    solve_backward,
    solve_forward_flipped,
)
from conftest import make_scalar


class TestAlgebraicRoots:
    def test_reference_example(self):
        assert algebraic_roots(1.0, 1.0, 3.0, 1.0) == pytest.approx((-1.0, 3.0))

    def test_double_root_at_origin(self):
        assert algebraic_roots(0.0, 1.0, 0.0, 1.0) == pytest.approx((0.0, 0.0))

    def test_linear_case_returns_single_root(self):
        root, other = algebraic_roots(2.0, 0.0, 3.0, 1.0)
        assert other is None
        assert 2 * 2.0 * root + 3.0 == pytest.approx(0.0, abs=1e-12)

    def test_degenerate_rejected(self):
        with pytest.raises(ValueError):
            algebraic_roots(0.0, 0.0, 1.0, 1.0)

    @given(
        a=st.floats(-5, 5),
        b=st.floats(0.1, 5),
        q=st.floats(0, 10),
        r=st.floats(0.01, 10),
    )
    def test_residual_vanishes(self, a, b, q, r):
        s = b * b / r
        lo, hi = algebraic_roots(a, b, q, r)
        scale = max(1.0, abs(lo), abs(hi)) ** 2
        for th in (lo, hi):
            assert abs(-s * th * th + 2 * a * th + q) <= 1e-10 * scale

    def test_roots_sorted(self):
        lo, hi = algebraic_roots(-2.0, 1.0, 4.0, 2.0)
        assert lo <= hi


class TestClosedForm:
    def test_zero_at_zero(self):
        assert closed_form_theta(1.0, 1.0, 3.0, 1.0, 0.0) == 0.0

    def test_long_time_limit(self):
        # lam1 * R / B**2 with lam1 = 1 + sqrt(1 + 3) = 3
        assert closed_form_theta(1.0, 1.0, 3.0, 1.0, 60.0) == pytest.approx(3.0, abs=1e-9)

    def test_limit_matches_larger_algebraic_root(self):
        for a, b, q, r in [(1, 1, 3, 1), (0.5, 2, 1, 0.5), (-1, 1, 2, 1)]:
            _, hi = algebraic_roots(a, b, q, r)
            assert closed_form_theta(a, b, q, r, 80.0) == pytest.approx(hi, abs=1e-8)

    def test_agrees_with_euler_at_tau_one(self):
        # A=0, Q=B=R=1 at tau=1; the stepping error is first order in dt
        # (about 1.8*dt here), so 1e-5 gives agreement at the few-1e-6 level.
        a, b, q, r = 0.0, 1.0, 1.0, 1.0
        grid = TimeGrid(0.0, 1.0, 1e-5)
        sol = solve_forward_flipped(make_scalar(a=a, b=b, q=q, r=r, horizon=1.0), grid)
        assert abs(sol.theta[-1] - closed_form_theta(a, b, q, r, 1.0)) < 5e-6

    def test_first_order_agreement_scaling(self):
        a, b, q, r = 1.0, 1.0, 3.0, 1.0
        errors = []
        for dt in (2e-4, 1e-4, 5e-5):
            grid = TimeGrid(0.0, 2.0, dt)
            sol = solve_forward_flipped(
                make_scalar(a=a, b=b, q=q, r=r, horizon=2.0), grid
            )
            exact = np.array(
                [closed_form_theta(a, b, q, r, t) for t in grid.times]
            )
            errors.append(np.abs(sol.theta - exact).max())
        for coarse, fine in zip(errors, errors[1:]):
            assert 1.8 <= coarse / fine <= 2.2

    def test_rejects_zero_b(self):
        with pytest.raises(ValueError):
            closed_form_theta(1.0, 0.0, 1.0, 1.0, 1.0)

    def test_rejects_coincident_exponents(self):
        with pytest.raises(ValueError):
            closed_form_theta(0.0, 1.0, 0.0, 1.0, 1.0)

    def test_pole_detected(self):
        # q < 0 puts both exponents on the same side and creates a pole
        a, b, q, r = 1.0, 1.0, -0.75, 1.0
        with pytest.raises(ValueError):
            # pole where e^{(lam2-lam1) tau} = lam2/lam1 = 1/3
            tau = math.log(3.0) / (2.0 * math.sqrt(a * a + q))
            closed_form_theta(a, b, q, r, tau)


class TestFlippedForward:
    def test_zero_weight_stays_zero(self):
        grid = TimeGrid(0.0, 5.0, 0.01)
        sol = solve_forward_flipped(make_scalar(q=0.0, horizon=5.0), grid)
        assert np.array_equal(sol.theta, np.zeros(501))

    def test_converges_to_larger_root(self):
        grid = TimeGrid(0.0, 20.0, 0.001)
        sol = solve_forward_flipped(make_scalar(q=3.0, horizon=20.0), grid)
        assert not sol.diverged
        assert sol.theta[-1] == pytest.approx(3.0, abs=1e-9)
        assert np.abs(np.diff(sol.theta[-100:])).max() < 1e-12

    def test_direction_tag(self):
        grid = TimeGrid(0.0, 1.0, 0.1)
        assert (
            solve_forward_flipped(make_scalar(horizon=1.0), grid).direction
            is Direction.FORWARD_FLIPPED
        )

    def test_matrix_starts_from_terminal_weight(self):
        problem = kinetic_embedding(1, 1, 1, 1, 1, 2.0, [0, 0], ReferenceSignal.z1())
        grid = TimeGrid(0.0, 2.0, 0.01)
        sol = solve_forward_flipped(problem, grid)
        assert np.array_equal(sol.theta[0], np.zeros((2, 2)))

    def test_matrix_symmetry_preserved(self):
        problem = kinetic_embedding(1, 1, 1, 1, 1, 25.0, [2, 0], ReferenceSignal.z1())
        grid = TimeGrid(0.0, 25.0, 0.01)
        theta = solve_forward_flipped(problem, grid).theta
        asym = np.abs(theta - theta.transpose(0, 2, 1)).max()
        assert asym <= 1e-10 * max(1.0, np.abs(theta).max())

    def test_matrix_stays_psd(self):
        # the early-transient eigenvalue dip is an O(dt**3) stepping
        # artifact; at the benchmark resolution it sits far above -1e-8
        problem = kinetic_embedding(1, 1, 1, 1, 1, 10.0, [2, 0], ReferenceSignal.z1())
        grid = TimeGrid(0.0, 10.0, 2.5e-4)
        theta = solve_forward_flipped(problem, grid).theta
        assert np.linalg.eigvalsh(theta).min() >= -1e-8


class TestBackward:
    def test_zero_fixed_point(self):
        grid = TimeGrid(0.0, 5.0, 0.01)
        sol = solve_backward(make_scalar(q=0.0, horizon=5.0), grid)
        assert np.array_equal(sol.theta, np.zeros(501))

    def test_long_horizon_reaches_stabilizing_root(self):
        grid = TimeGrid(0.0, 10.0, 0.001)
        sol = solve_backward(make_scalar(q=3.0, horizon=10.0), grid)
        assert sol.direction is Direction.BACKWARD_ORIGINAL
        assert abs(sol.theta[0] - 3.0) < 1e-3
        assert sol.theta[-1] == 0.0  # terminal condition

    def test_time_reversal_identity_exact(self):
        # pure regulator with a terminal weight; backward at t equals
        # flipped at T - t exactly at grid points by construction
        from lqtbench import MatrixLqtProblem

        problem = MatrixLqtProblem(
            a_mat=[[0.2, 1.0], [-0.5, -0.1]],
            b_mat=[[0.0], [1.0]],
            q_mat=[[1.0, 0.0], [0.0, 0.5]],
            r_mat=[[2.0]],
            f_mat=[[1.0], [0.0]],
            horizon=4.0,
            x0=[1.0, 0.0],
            signal=ReferenceSignal.constant(0.0),
            d_mat=[[0.5, 0.1], [0.1, 0.3]],
        )
        grid = TimeGrid(0.0, 4.0, 0.01)
        back = solve_backward(problem, grid)
        flip = solve_forward_flipped(problem, grid)
        assert np.array_equal(back.theta, flip.theta[::-1])

    def test_scalar_matches_lifted_matrix(self):
        p = make_scalar(q=3.0, horizon=10.0)
        grid = TimeGrid(0.0, 10.0, 0.01)
        scalar = solve_backward(p, grid).theta
        lifted = solve_backward(lift_scalar(p), grid).theta[:, 0, 0]
        assert np.abs(scalar - lifted).max() <= 1e-12


class TestFeedforward:
    def _theta(self, problem, grid):
        return solve_forward_flipped(problem, grid)

    def test_zero_signal_gives_zero(self):
        p = make_scalar(signal=ReferenceSignal.constant(0.0), horizon=5.0)
        grid = TimeGrid(0.0, 5.0, 0.01)
        eta = feedforward_forward(p, self._theta(p, grid), grid)["eta"]
        assert np.array_equal(eta, np.zeros(501))

    def test_zero_tracking_weight_gives_zero(self):
        p = make_scalar(q=0.0, signal=ReferenceSignal.constant(2.0), horizon=5.0)
        grid = TimeGrid(0.0, 5.0, 0.01)
        eta = feedforward_forward(p, self._theta(p, grid), grid)["eta"]
        assert np.array_equal(eta, np.zeros(501))

    def test_constant_signal_fixed_point(self):
        # stationarity of eta' = (A - S*theta_inf)*eta - Q*c at the
        # converged gain theta_inf = lam1*R/B**2
        c = 2.0
        p = make_scalar(signal=ReferenceSignal.constant(c), horizon=30.0)
        grid = TimeGrid(0.0, 30.0, 0.001)
        theta_inf = algebraic_roots(p.a, p.b, p.q, p.r)[1]
        expected = p.q * c / (p.a - p.s_coef * theta_inf)
        eta = feedforward_forward(p, self._theta(p, grid), grid)["eta"]
        assert eta[-1] == pytest.approx(expected, abs=1e-6)
        assert expected == pytest.approx(-math.sqrt(2.0))  # A=B=Q=R=1, c=2

    def test_present_vs_reversed_time_differ(self):
        p = make_scalar(signal=ReferenceSignal.z2(), horizon=25.0)
        grid = TimeGrid(0.0, 25.0, 0.01)
        th = self._theta(p, grid)
        present = feedforward_forward(p, th, grid, SignalAccess.PRESENT_TIME)["eta"]
        reversed_ = feedforward_forward(p, th, grid, SignalAccess.TIME_REVERSED)["eta"]
        assert not np.allclose(present, reversed_)

    def test_requires_matching_grid(self):
        p = make_scalar(horizon=5.0)
        grid = TimeGrid(0.0, 5.0, 0.01)
        other = TimeGrid(0.0, 5.0, 0.02)
        th = self._theta(p, grid)
        with pytest.raises(ValueError):
            feedforward_forward(p, th, other)

    def test_requires_flipped_direction(self):
        p = make_scalar(horizon=5.0)
        grid = TimeGrid(0.0, 5.0, 0.01)
        with pytest.raises(ValueError):
            feedforward_forward(p, solve_backward(p, grid), grid)

    def test_matrix_path_matches_scalar(self):
        p = make_scalar(signal=ReferenceSignal.z1(), horizon=10.0)
        grid = TimeGrid(0.0, 10.0, 0.01)
        eta_s = feedforward_forward(p, self._theta(p, grid), grid)["eta"]
        lifted = lift_scalar(p)
        eta_m = feedforward_forward(lifted, self._theta(lifted, grid), grid)["eta"][:, 0]
        assert np.abs(eta_s - eta_m).max() <= 1e-12
