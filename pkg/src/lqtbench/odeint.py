"""Uniform-grid explicit Euler stepping and the trajectory container.

All experiment paths share this one fixed-step first-order discretization;
there is deliberately no adaptive or higher-order machinery here, so every
solver comparison runs on the same grid arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict

import numpy as np

#: Default magnitude bound: integration halts and the trajectory is flagged
#: divergent once any state component exceeds this.  Far above the 1e4
#: cost-reporting threshold so that blow-up detection and table formatting
#: stay independent concerns.
DEFAULT_MAGNITUDE_BOUND = 1e12


@dataclass(frozen=True)
class TimeGrid:
    """Uniform discretization of [t_start, t_end] with step dt.

    n_steps is inferred by rounding (t_end - t_start) / dt and must
    reproduce t_end to within 1e-9 relative tolerance, i.e. dt has to
    divide the interval.
    """

    t_start: float
    t_end: float
    dt: float

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError("dt must be positive and finite")
        span = self.t_end - self.t_start
        n = round(span / self.dt)
        if n < 1:
            raise ValueError("grid must contain at least one step")
        if abs(self.t_start + n * self.dt - self.t_end) > 1e-9 * max(1.0, abs(span)):
            raise ValueError(
                f"dt={self.dt} does not evenly divide [{self.t_start}, {self.t_end}]"
            )

    @property
    def n_steps(self) -> int:
        return round((self.t_end - self.t_start) / self.dt)

    @property
    def times(self) -> np.ndarray:
        """All n_steps + 1 grid times."""
        return self.t_start + self.dt * np.arange(self.n_steps + 1)

    def time(self, k: int) -> float:
        return self.t_start + k * self.dt

    def halved(self) -> "TimeGrid":
        """The same interval at half the step size."""
        return TimeGrid(self.t_start, self.t_end, self.dt / 2.0)


@dataclass
class Trajectory:
    """Named time-indexed channels on a shared grid.

    Every channel has n_steps + 1 leading entries (axis 0 is time).  NaN
    entries are only permitted when ``diverged`` is set, in which case the
    tail beyond the halt point is NaN-filled.
    """

    grid: TimeGrid
    channels: Dict[str, np.ndarray]
    diverged: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        want = self.grid.n_steps + 1
        for name, arr in self.channels.items():
            arr = np.asarray(arr, dtype=float)
            if arr.shape[0] != want:
                raise ValueError(
                    f"channel {name!r} has {arr.shape[0]} samples, expected {want}"
                )
            self.channels[name] = arr
        if not self.diverged:
            for name, arr in self.channels.items():
                if not np.isfinite(arr).all():
                    raise ValueError(
                        f"channel {name!r} contains non-finite entries but the "
                        "trajectory is not flagged divergent"
                    )

    def __getitem__(self, name: str) -> np.ndarray:
        return self.channels[name]

    def to_csv(self, path_or_file):
        """Write ``t,<channel>,...`` rows at full double precision.

        Matrix-valued channels are flattened row-major into columns named
        ``<channel>_i_j`` (vectors into ``<channel>_i``).
        """
        header = ["t"]
        columns = []
        for name, arr in self.channels.items():
            if arr.ndim == 1:
                header.append(name)
                columns.append(arr.reshape(-1, 1))
            else:
                flat = arr.reshape(arr.shape[0], -1)
                shape = arr.shape[1:]
                for idx in np.ndindex(shape):
                    header.append(name + "".join(f"_{i}" for i in idx))
                columns.append(flat)
        table = np.hstack([self.grid.times.reshape(-1, 1)] + columns)

        def write(fh):
            fh.write(",".join(header) + "\n")
            for row in table:
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")

        if hasattr(path_or_file, "write"):
            write(path_or_file)
        else:
            with open(path_or_file, "w") as fh:
                write(fh)


def euler_step(state, derivative, dt: float):
    """One explicit Euler step: state + dt * derivative, exactly."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if isinstance(state, np.ndarray):
        return state + dt * np.asarray(derivative)
    return state + dt * derivative


def integrate(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    init,
    grid: TimeGrid,
    magnitude_bound: float = DEFAULT_MAGNITUDE_BOUND,
    channel: str = "y",
) -> Trajectory:
    """Integrate y' = rhs(t, y) over the grid with explicit Euler.

    Sample 0 is ``init``; each later sample is one euler_step.  If any
    component exceeds ``magnitude_bound`` (or goes non-finite) the loop
    halts, the remaining samples are NaN and the trajectory is flagged
    divergent.

    Returns:
        Trajectory with the single channel ``channel``.
    """
    y = np.atleast_1d(np.array(init, dtype=float))
    scalar = np.ndim(init) == 0
    n = grid.n_steps
    out = np.full((n + 1,) + y.shape, np.nan)
    out[0] = y
    diverged = False
    for k in range(n):
        y = y + grid.dt * np.asarray(rhs(grid.time(k), y), dtype=float)
        if not np.isfinite(y).all() or np.abs(y).max() > magnitude_bound:
            diverged = True
            break
        out[k + 1] = y
    data = out[:, 0] if scalar else out
    return Trajectory(grid, {channel: data}, diverged=diverged)
