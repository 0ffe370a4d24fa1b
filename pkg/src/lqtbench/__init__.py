"""Linear quadratic tracking: exact, forward sign-flip, and
receding-horizon solvers with a reproduction benchmark."""

from .model import (
    MatrixLqtProblem,
    ReferenceSignal,
    ScalarLqtProblem,
    SignalKind,
    kinetic_embedding,
    lift_scalar,
    load_problem_config,
    sample_signal,
)
from .odeint import DEFAULT_MAGNITUDE_BOUND, TimeGrid, Trajectory, euler_step, integrate
from .riccati import (
    Direction,
    RiccatiSolution,
    SignalAccess,
    algebraic_roots,
    closed_form_theta,
    feedforward_forward,
    solve_backward,
    solve_forward_flipped,
)
from .metrics import (
    DEFAULT_DIVERGENCE_THRESHOLD,
    CostReport,
    evaluate_cost,
    percentage_error,
)
from .solvers import (
    FORWARD,
    MPC,
    OPTIMAL,
    MpcConfig,
    SolveResult,
    solve_forward_sift,
    solve_mpc,
    solve_optimal,
)
from .bench import (
    ComparisonReport,
    ExperimentGrid,
    StabilityDemoReport,
    TimingReport,
    dump_trajectories,
    mpc_dt,
    run_grid,
    run_stability_demo,
    run_table1,
    run_table3,
    run_timing,
    table1_dt,
)

__version__ = "0.1.0"

__all__ = [
    "MatrixLqtProblem",
    "ReferenceSignal",
    "ScalarLqtProblem",
    "SignalKind",
    "kinetic_embedding",
    "lift_scalar",
    "load_problem_config",
    "sample_signal",
    "DEFAULT_MAGNITUDE_BOUND",
    "TimeGrid",
    "Trajectory",
    "euler_step",
    "integrate",
    "Direction",
    "RiccatiSolution",
    "SignalAccess",
    "algebraic_roots",
    "closed_form_theta",
    "feedforward_forward",
    "solve_backward",
    "solve_forward_flipped",
    "DEFAULT_DIVERGENCE_THRESHOLD",
    "CostReport",
    "evaluate_cost",
    "percentage_error",
    "FORWARD",
    "MPC",
    "OPTIMAL",
    "MpcConfig",
    "SolveResult",
    "solve_forward_sift",
    "solve_mpc",
    "solve_optimal",
    "ComparisonReport",
    "ExperimentGrid",
    "StabilityDemoReport",
    "TimingReport",
    "dump_trajectories",
    "mpc_dt",
    "run_grid",
    "run_stability_demo",
    "run_table1",
    "run_table3",
    "run_timing",
    "table1_dt",
]
