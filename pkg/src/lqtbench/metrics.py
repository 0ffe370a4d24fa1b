"""Cost functional evaluation, percentage error, divergence classification."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import MatrixLqtProblem, ScalarLqtProblem, AnyLqtProblem
from .odeint import Trajectory

#: Average-cost level above which a run is reported as divergent.  This is
#: the table-formatting convention (cells render as "*"), distinct from the
#: much larger integrator magnitude bound.
DEFAULT_DIVERGENCE_THRESHOLD = 1e4


@dataclass(frozen=True)
class CostReport:
    """Cost of one trajectory; ``diverged`` marks either a non-finite
    trajectory or an average cost beyond the reporting threshold."""

    total_cost: float
    average_cost: float
    diverged: bool
    pe_vs_optimal: float | None = None


def evaluate_cost(
    problem: AnyLqtProblem,
    trajectory: Trajectory,
    divergence_threshold: float = DEFAULT_DIVERGENCE_THRESHOLD,
) -> CostReport:
    """Left-endpoint rectangle-rule cost of a state/control trajectory.

        total = sum_{k=0}^{n-1} dt * [ (y_k - F z_k)' Q (y_k - F z_k)
                                       + a_k' R a_k ] / 2

    matching the first-order accuracy of the stepping scheme; the average
    divides by the horizon.  The signal is sampled lazily at grid times.
    A trajectory with NaN entries (halted integration) yields an infinite,
    divergent report.
    """
    grid = trajectory.grid
    n = grid.n_steps
    dt = grid.dt
    T = problem.horizon
    y = trajectory["y"]
    alpha = trajectory["alpha"]
    sig = problem.signal

    if trajectory.diverged or not (
        np.isfinite(y).all() and np.isfinite(alpha).all()
    ):
        return CostReport(math.inf, math.inf, True)

    if isinstance(problem, ScalarLqtProblem):
        q, r = problem.q, problem.r
        total = 0.0
        for k in range(n):
            e = y[k] - sig.sample(grid.time(k), T)
            total += q * e * e + r * alpha[k] * alpha[k]
        total *= dt / 2.0
    else:
        Q, R, F = problem.q_mat, problem.r_mat, problem.f_mat
        total = 0.0
        for k in range(n):
            z = np.atleast_1d(sig.sample(grid.time(k), T))
            e = y[k] - F @ z
            a = alpha[k]
            total += float(e @ Q @ e + a @ R @ a)
        total *= dt / 2.0

    total = float(total)
    average = total / T
    return CostReport(total, average, bool(average > divergence_threshold))


def percentage_error(cost_approx: float, cost_opt: float) -> float:
    """Relative excess cost of an approximation over the optimum, in percent:
    (cost_approx - cost_opt) / cost_opt * 100.

    Raises:
        ValueError: if the baseline cost is not strictly positive.
    """
    if not (cost_opt > 0):
        raise ValueError("optimal cost must be positive to define a percentage error")
    return (cost_approx - cost_opt) / cost_opt * 100.0
