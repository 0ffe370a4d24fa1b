"""Riccati machinery for the quadratic value-function coefficient.

The finite-horizon gain equation is integrated in one of two orientations:

* ``solve_backward``: the terminal-condition problem, realized as
  index-reversed forward Euler on the sign-flipped equation so that the
  time-reversal equivalence between the two orientations holds exactly at
  grid points.
* ``solve_forward_flipped``: the sign-flipped initial-value problem,
  stepped forward as-is.

The scalar closed form and the algebraic (steady-state) roots provide
independent oracles for both.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .model import MatrixLqtProblem, ScalarLqtProblem, AnyLqtProblem
from .odeint import DEFAULT_MAGNITUDE_BOUND, TimeGrid, Trajectory


class Direction(enum.Enum):
    BACKWARD_ORIGINAL = "backward_original"
    FORWARD_FLIPPED = "forward_flipped"


class SignalAccess(enum.Enum):
    """Which time the feedforward equation reads the signal at."""

    PRESENT_TIME = "present"     # z(tau): uses only the current time
    TIME_REVERSED = "reversed"   # z(T - tau): replays the signal from the end


@dataclass(frozen=True)
class RiccatiSolution:
    """Time-indexed gain values on a grid.

    ``theta`` has shape (n_steps + 1,) in the scalar case and
    (n_steps + 1, n, n) in the matrix case.  For BACKWARD_ORIGINAL the
    index is forward time t; for FORWARD_FLIPPED it is the flipped time tau.
    """

    grid: TimeGrid
    theta: np.ndarray
    direction: Direction
    diverged: bool = False

    @property
    def is_scalar(self) -> bool:
        return self.theta.ndim == 1

    def final(self):
        return self.theta[-1]


def _check_grid(problem: AnyLqtProblem, grid: TimeGrid):
    if abs(grid.t_start) > 1e-12 or abs(grid.t_end - problem.horizon) > 1e-9 * max(
        1.0, problem.horizon
    ):
        raise ValueError("grid must cover [0, horizon] of the problem")


def _scalar_coeffs(problem: ScalarLqtProblem):
    return problem.a, problem.b, problem.q, problem.r, problem.s_coef


def solve_forward_flipped(
    problem: AnyLqtProblem,
    grid: TimeGrid,
    magnitude_bound: float = DEFAULT_MAGNITUDE_BOUND,
) -> RiccatiSolution:
    """Integrate the sign-flipped gain equation forward from its initial
    weight (the terminal weight of the original problem; zero for scalar
    tracking instances).

    Scalar:  theta' = -S*theta**2 + 2*A*theta + Q,  S = B**2/R.
    Matrix:  theta' = -theta B R^-1 B' theta + theta A + A' theta + Q,
             re-symmetrized after every step so Euler drift cannot break
             the symmetry invariant.
    """
    _check_grid(problem, grid)
    n = grid.n_steps
    dt = grid.dt
    diverged = False

    if isinstance(problem, ScalarLqtProblem):
        a, _, q, _, s = _scalar_coeffs(problem)
        out = np.full(n + 1, np.nan)
        th = 0.0
        out[0] = th
        for k in range(n):
            th = th + dt * (-s * th * th + 2.0 * a * th + q)
            if not math.isfinite(th) or abs(th) > magnitude_bound:
                diverged = True
                break
            out[k + 1] = th
        return RiccatiSolution(grid, out, Direction.FORWARD_FLIPPED, diverged)

    A, B, Q, R = problem.a_mat, problem.b_mat, problem.q_mat, problem.r_mat
    S = B @ np.linalg.solve(R, B.T)
    out = np.full((n + 1, problem.n, problem.n), np.nan)
    th = problem.d_mat.copy()
    out[0] = th
    for k in range(n):
        th = th + dt * (-th @ S @ th + th @ A + A.T @ th + Q)
        th = (th + th.T) / 2.0
        if not np.isfinite(th).all() or np.abs(th).max() > magnitude_bound:
            diverged = True
            break
        out[k + 1] = th
    return RiccatiSolution(grid, out, Direction.FORWARD_FLIPPED, diverged)


def solve_backward(
    problem: AnyLqtProblem,
    grid: TimeGrid,
    magnitude_bound: float = DEFAULT_MAGNITUDE_BOUND,
) -> RiccatiSolution:
    """Solve the terminal-condition gain equation on [0, T].

    Realized as the flipped forward solve followed by index reversal, so
    theta(t_k) equals the flipped solution at tau = T - t_k exactly.  The
    result is indexed by forward time; entry -1 is the terminal weight.
    """
    flipped = solve_forward_flipped(problem, grid, magnitude_bound)
    return RiccatiSolution(
        grid, flipped.theta[::-1].copy(), Direction.BACKWARD_ORIGINAL, flipped.diverged
    )


def algebraic_roots(a: float, b: float, q: float, r: float):
    """Roots of the steady-state equation -S*theta**2 + 2*A*theta + Q = 0
    with S = B**2/R, sorted ascending.

    For S = 0 the equation is linear; the single root is paired with None.

    Raises:
        ValueError: if the equation degenerates entirely (S = 0 and A = 0).
    """
    s = b * b / r
    if s == 0.0:
        if a == 0.0:
            raise ValueError("equation is degenerate for S = 0 and A = 0")
        return (-q / (2.0 * a), None)
    disc = a * a + s * q
    if disc < 0:
        raise ValueError("no real roots: A**2 + S*Q < 0")
    root = math.sqrt(disc)
    lo, hi = (a - root) / s, (a + root) / s
    return (lo, hi)


def closed_form_theta(a: float, b: float, q: float, r: float, tau: float) -> float:
    """Closed-form solution of the scalar flipped gain equation started at 0.

    With lam1 = A + sqrt(A**2 + Q*B**2/R) and lam2 = A - sqrt(...):

        theta(tau) = (R/B**2) * lam1*lam2 * (e^{lam1 tau} - e^{lam2 tau})
                     / (lam2 e^{lam1 tau} - lam1 e^{lam2 tau})

    evaluated in overflow-safe form.  As tau grows this approaches
    lam1 * R / B**2, the larger algebraic root.

    Raises:
        ValueError: if b = 0, if the roots coincide (the confluent case is
            not supported), or if the denominator vanishes at tau.
    """
    if b == 0.0:
        raise ValueError("closed form requires b != 0")
    disc = a * a + q * b * b / r
    if disc <= 0:
        raise ValueError("coincident exponents: A**2 + Q*B**2/R must be positive")
    root = math.sqrt(disc)
    lam1, lam2 = a + root, a - root
    # Divide through by e^{lam1 tau}; lam2 - lam1 < 0 keeps this bounded.
    decay = math.exp((lam2 - lam1) * tau)
    den = lam2 - lam1 * decay
    if abs(den) <= 1e-14 * (abs(lam2) + abs(lam1) * decay):
        raise ValueError(f"closed form has a pole at tau = {tau}")
    return (r / (b * b)) * lam1 * lam2 * (1.0 - decay) / den


def feedforward_forward(
    problem: AnyLqtProblem,
    theta_sol: RiccatiSolution,
    grid: TimeGrid,
    signal_access: SignalAccess = SignalAccess.PRESENT_TIME,
    magnitude_bound: float = DEFAULT_MAGNITUDE_BOUND,
) -> Trajectory:
    """Integrate the signal-driven feedforward term forward from zero.

    Scalar:  eta' = (A - S*theta(tau)) * eta - Q * z_src(tau)
    Matrix:  eta' = (A' - theta(tau) S) eta - Q F z_src(tau)

    where z_src is the signal at the present time tau (PRESENT_TIME) or at
    T - tau (TIME_REVERSED).  The matrix form reduces exactly to the scalar
    one for 1x1 problems.

    Args:
        theta_sol: a FORWARD_FLIPPED solution on the same grid.

    Returns:
        Trajectory with channel ``eta``.
    """
    _check_grid(problem, grid)
    if theta_sol.direction is not Direction.FORWARD_FLIPPED:
        raise ValueError("feedforward integration requires a forward-flipped theta")
    if theta_sol.grid != grid:
        raise ValueError("theta solution and grid do not match")
    if theta_sol.diverged:
        raise ValueError("theta solution is divergent")

    n = grid.n_steps
    dt = grid.dt
    T = problem.horizon
    sig = problem.signal
    reversed_time = signal_access is SignalAccess.TIME_REVERSED
    diverged = False

    if isinstance(problem, ScalarLqtProblem):
        a, _, q, _, s = _scalar_coeffs(problem)
        th = theta_sol.theta
        out = np.full(n + 1, np.nan)
        eta = 0.0
        out[0] = eta
        for k in range(n):
            tau = grid.time(k)
            z = sig.sample(T - tau if reversed_time else tau, T)
            eta = eta + dt * ((a - s * th[k]) * eta - q * z)
            if not math.isfinite(eta) or abs(eta) > magnitude_bound:
                diverged = True
                break
            out[k + 1] = eta
        return Trajectory(grid, {"eta": out}, diverged=diverged)

    A, B, Q, R, F = (
        problem.a_mat,
        problem.b_mat,
        problem.q_mat,
        problem.r_mat,
        problem.f_mat,
    )
    S = B @ np.linalg.solve(R, B.T)
    QF = Q @ F
    th = theta_sol.theta
    out = np.full((n + 1, problem.n), np.nan)
    eta = np.zeros(problem.n)
    out[0] = eta
    for k in range(n):
        tau = grid.time(k)
        z = np.atleast_1d(sig.sample(T - tau if reversed_time else tau, T))
        eta = eta + dt * ((A.T - th[k] @ S) @ eta - QF @ z)
        if not np.isfinite(eta).all() or np.abs(eta).max() > magnitude_bound:
            diverged = True
            break
        out[k + 1] = eta
    return Trajectory(grid, {"eta": out}, diverged=diverged)
