"""End-to-end solution strategies for the tracking problem.

Three competitors share one grid and one cost metric:

* ``solve_optimal``: the clairvoyant baseline; terminal-condition gain and
  feedforward passes (realized forward in flipped time, then index
  reversed) followed by a forward rollout.  Reads the signal over the
  whole horizon.
* ``solve_forward_sift``: the forward sign-flip approximation; gain,
  feedforward, state and control are advanced simultaneously and the
  signal is only ever read at the current step time.
* ``solve_mpc``: receding-horizon control; at every step an exact
  discrete dynamic-programming solve over a w-point window produces the
  control that is applied for one step.

Wall times cover the solve loops only (no problem construction, no IO).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .metrics import DEFAULT_DIVERGENCE_THRESHOLD, evaluate_cost
from .model import MatrixLqtProblem, ScalarLqtProblem, AnyLqtProblem
from .odeint import DEFAULT_MAGNITUDE_BOUND, TimeGrid, Trajectory
from .riccati import SignalAccess, feedforward_forward, solve_forward_flipped

OPTIMAL = "optimal"
FORWARD = "forward"
MPC = "mpc"


@dataclass(frozen=True)
class MpcConfig:
    """Receding-horizon settings; ``window_steps`` counts grid points in
    the lookahead window (2 is the minimal-information setting: the
    controller sees exactly one step ahead)."""

    window_steps: int

    def __post_init__(self):
        if self.window_steps < 2:
            raise ValueError("window_steps must be at least 2")


@dataclass(frozen=True)
class SolveResult:
    """Outcome of one solver run on one problem/grid."""

    trajectory: Trajectory
    total_cost: float
    average_cost: float
    wall_time: float
    diverged: bool
    solver: str
    window_steps: int | None = None

    @property
    def solver_label(self) -> str:
        if self.solver == MPC:
            return f"mpc(w={self.window_steps})"
        return self.solver


def _check_grid(problem: AnyLqtProblem, grid: TimeGrid):
    if abs(grid.t_start) > 1e-12 or abs(grid.t_end - problem.horizon) > 1e-9 * max(
        1.0, problem.horizon
    ):
        raise ValueError("grid must cover [0, horizon] of the problem")


def _finish(problem, grid, channels, diverged, wall, solver, w=None,
            divergence_threshold=DEFAULT_DIVERGENCE_THRESHOLD) -> SolveResult:
    traj = Trajectory(grid, channels, diverged=diverged)
    report = evaluate_cost(problem, traj, divergence_threshold)
    return SolveResult(
        trajectory=traj,
        total_cost=report.total_cost,
        average_cost=report.average_cost,
        wall_time=wall,
        diverged=diverged or report.diverged,
        solver=solver,
        window_steps=w,
    )


def solve_optimal(
    problem: AnyLqtProblem,
    grid: TimeGrid,
    magnitude_bound: float = DEFAULT_MAGNITUDE_BOUND,
    divergence_threshold: float = DEFAULT_DIVERGENCE_THRESHOLD,
) -> SolveResult:
    """Exact finite-horizon solution on the grid.

    Backward pass: gain theta and feedforward eta from zero terminal
    conditions (theta also weighs the terminal state in pure-regulator
    matrix instances).  Forward pass: y' = A y + B a with
    a = -R^-1 B' (theta y + eta) from y(0) = x0.
    """
    _check_grid(problem, grid)
    n = grid.n_steps
    dt = grid.dt
    T = problem.horizon
    sig = problem.signal

    t0 = time.perf_counter()
    flipped = solve_forward_flipped(problem, grid, magnitude_bound)
    if flipped.diverged:
        raise ArithmeticError("gain equation diverged during the backward pass")
    eta_hat = feedforward_forward(
        problem, flipped, grid, SignalAccess.TIME_REVERSED, magnitude_bound
    )
    if eta_hat.diverged:
        raise ArithmeticError("feedforward equation diverged during the backward pass")

    diverged = False
    if isinstance(problem, ScalarLqtProblem):
        a, b, r = problem.a, problem.b, problem.r
        th = flipped.theta[::-1].tolist()
        et = eta_hat["eta"][::-1].tolist()
        y = [math.nan] * (n + 1)
        p = [math.nan] * (n + 1)
        al = [math.nan] * (n + 1)
        zs = [math.nan] * (n + 1)
        yk = problem.x0
        gain = -b / r
        for k in range(n):
            zs[k] = sig.sample(k * dt, T)
            y[k] = yk
            pk = th[k] * yk + et[k]
            p[k] = pk
            ak = gain * pk
            al[k] = ak
            yk = yk + dt * (a * yk + b * ak)
            if not math.isfinite(yk) or abs(yk) > magnitude_bound:
                diverged = True
                break
        else:
            y[n] = yk
            zs[n] = sig.sample(T, T)
            p[n] = th[n] * yk + et[n]
            al[n] = gain * p[n]
        wall = time.perf_counter() - t0
        channels = {
            "y": np.array(y),
            "p": np.array(p),
            "alpha": np.array(al),
            "theta": np.asarray(th),
            "eta": np.asarray(et),
            "z": np.array(zs),
        }
        return _finish(problem, grid, channels, diverged, wall, OPTIMAL,
                       divergence_threshold=divergence_threshold)

    A, B, R = problem.a_mat, problem.b_mat, problem.r_mat
    th = flipped.theta[::-1].copy()
    et = eta_hat["eta"][::-1].copy()
    RinvBt = np.linalg.solve(R, B.T)
    y = np.full((n + 1, problem.n), np.nan)
    p = np.full((n + 1, problem.n), np.nan)
    al = np.full((n + 1, problem.m), np.nan)
    yk = problem.x0.copy()
    for k in range(n + 1):
        y[k] = yk
        pk = th[k] @ yk + et[k]
        p[k] = pk
        ak = -RinvBt @ pk
        al[k] = ak
        if k == n:
            break
        yk = yk + dt * (A @ yk + B @ ak)
        if not np.isfinite(yk).all() or np.abs(yk).max() > magnitude_bound:
            diverged = True
            y[k + 1:] = np.nan
            break
    wall = time.perf_counter() - t0
    channels = {"y": y, "p": p, "alpha": al, "theta": th, "eta": et}
    return _finish(problem, grid, channels, diverged, wall, OPTIMAL,
                   divergence_threshold=divergence_threshold)


def solve_forward_sift(
    problem: AnyLqtProblem,
    grid: TimeGrid,
    magnitude_bound: float = DEFAULT_MAGNITUDE_BOUND,
    divergence_threshold: float = DEFAULT_DIVERGENCE_THRESHOLD,
) -> SolveResult:
    """Forward sign-flip approximation.

    Gain and feedforward start from zero at tau = 0 and are stepped
    together with the state; the costate estimate p = theta*y + eta gives
    the control a = -R^-1 B' p.  The signal is sampled only at the current
    step time, never ahead of it, so the whole run is online.
    """
    _check_grid(problem, grid)
    n = grid.n_steps
    dt = grid.dt
    T = problem.horizon
    sig = problem.signal

    t0 = time.perf_counter()
    diverged = False
    if isinstance(problem, ScalarLqtProblem):
        a, b, q, r = problem.a, problem.b, problem.q, problem.r
        s = problem.s_coef
        gain = -b / r
        y = [math.nan] * (n + 1)
        p = [math.nan] * (n + 1)
        al = [math.nan] * (n + 1)
        ths = [math.nan] * (n + 1)
        ets = [math.nan] * (n + 1)
        zs = [math.nan] * (n + 1)
        yk = problem.x0
        th = 0.0
        et = 0.0
        for k in range(n + 1):
            z = sig.sample(k * dt, T)
            zs[k] = z
            y[k] = yk
            ths[k] = th
            ets[k] = et
            pk = th * yk + et
            p[k] = pk
            ak = gain * pk
            al[k] = ak
            if k == n:
                break
            yk = yk + dt * (a * yk + b * ak)
            th_next = th + dt * (-s * th * th + 2.0 * a * th + q)
            et = et + dt * ((a - s * th) * et - q * z)
            th = th_next
            if not (math.isfinite(yk) and math.isfinite(th) and math.isfinite(et)) or (
                abs(yk) > magnitude_bound
                or abs(th) > magnitude_bound
                or abs(et) > magnitude_bound
            ):
                diverged = True
                break
        wall = time.perf_counter() - t0
        channels = {
            "y": np.array(y),
            "p": np.array(p),
            "alpha": np.array(al),
            "theta": np.array(ths),
            "eta": np.array(ets),
            "z": np.array(zs),
        }
        return _finish(problem, grid, channels, diverged, wall, FORWARD,
                       divergence_threshold=divergence_threshold)

    A, B, Q, R, F = (
        problem.a_mat,
        problem.b_mat,
        problem.q_mat,
        problem.r_mat,
        problem.f_mat,
    )
    S = B @ np.linalg.solve(R, B.T)
    QF = Q @ F
    RinvBt = np.linalg.solve(R, B.T)
    nx, mu = problem.n, problem.m
    y = np.full((n + 1, nx), np.nan)
    p = np.full((n + 1, nx), np.nan)
    al = np.full((n + 1, mu), np.nan)
    ths = np.full((n + 1, nx, nx), np.nan)
    ets = np.full((n + 1, nx), np.nan)
    yk = problem.x0.copy()
    th = problem.d_mat.copy()
    et = np.zeros(nx)
    for k in range(n + 1):
        z = np.atleast_1d(sig.sample(k * dt, T))
        y[k] = yk
        ths[k] = th
        ets[k] = et
        pk = th @ yk + et
        p[k] = pk
        ak = -RinvBt @ pk
        al[k] = ak
        if k == n:
            break
        yk = yk + dt * (A @ yk + B @ ak)
        th_next = th + dt * (-th @ S @ th + th @ A + A.T @ th + Q)
        th_next = (th_next + th_next.T) / 2.0
        et = et + dt * ((A.T - th @ S) @ et - QF @ z)
        th = th_next
        bad = not (
            np.isfinite(yk).all() and np.isfinite(th).all() and np.isfinite(et).all()
        )
        if bad or max(np.abs(yk).max(), np.abs(th).max(), np.abs(et).max()) > magnitude_bound:
            diverged = True
            break
    wall = time.perf_counter() - t0
    channels = {"y": y, "p": p, "alpha": al, "theta": ths, "eta": ets}
    return _finish(problem, grid, channels, diverged, wall, FORWARD,
                   divergence_threshold=divergence_threshold)


def solve_mpc(
    problem: ScalarLqtProblem,
    grid: TimeGrid,
    config: MpcConfig,
    magnitude_bound: float = DEFAULT_MAGNITUDE_BOUND,
    divergence_threshold: float = DEFAULT_DIVERGENCE_THRESHOLD,
) -> SolveResult:
    """Receding-horizon control with a w-point lookahead window.

    At grid index k the window covers indices k..min(k+w-1, n) (clipped at
    the horizon end).  The window problem is the Euler transcription of
    the remaining-horizon functional truncated to the window: rectangle
    stage costs dt*[Q(y_j - z_j)^2 + R a_j^2]/2 on the window's steps plus
    the landing tracking cost dt*Q(y_e - z_e)^2/2 at the window end, and
    no cost-to-go beyond it.  Backward dynamic programming solves this
    exactly; only the first control is applied before the window rolls on.

    The signal buffer grows one sample per step, so the solver reads the
    signal exactly up to its declared lookahead edge.
    """
    if not isinstance(problem, ScalarLqtProblem):
        raise TypeError("receding-horizon solver handles scalar problems only")
    _check_grid(problem, grid)
    n = grid.n_steps
    dt = grid.dt
    T = problem.horizon
    w = config.window_steps
    sig = problem.signal
    a, b, q, r = problem.a, problem.b, problem.q, problem.r

    t0 = time.perf_counter()
    phi = 1.0 + a * dt
    gam = b * dt
    dtq = dt * q
    dtr = dt * r
    gam2 = gam * gam

    y = [math.nan] * (n + 1)
    al = [math.nan] * (n + 1)
    zs: list[float] = []
    yk = problem.x0
    diverged = False
    for k in range(n):
        e = k + w - 1
        if e > n:
            e = n
        while len(zs) <= e:
            zs.append(sig.sample(len(zs) * dt, T))
        # Backward sweep over the window: value V_j(x) = P x^2/2 + qq x.
        P = dtq
        qq = -dtq * zs[e]
        for j in range(e - 1, k, -1):
            den = dtr + gam2 * P
            K = gam * P * phi / den
            kap = gam * qq / den
            m = phi - gam * K
            qq = -dtq * zs[j] + dtr * K * kap - gam * kap * P * m + qq * m
            P = dtq + dtr * K * K + P * m * m
        den = dtr + gam2 * P
        ak = -(gam * P * phi * yk + gam * qq) / den
        y[k] = yk
        al[k] = ak
        yk = yk + dt * (a * yk + b * ak)
        if not math.isfinite(yk) or abs(yk) > magnitude_bound:
            diverged = True
            break
    else:
        y[n] = yk
        al[n] = 0.0  # no step follows the final grid point
    wall = time.perf_counter() - t0

    channels = {"y": np.array(y), "alpha": np.array(al)}
    if not diverged:
        channels["z"] = np.array(zs[: n + 1])
    return _finish(problem, grid, channels, diverged, wall, MPC, w,
                   divergence_threshold=divergence_threshold)
