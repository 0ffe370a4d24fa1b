"""Problem definitions: scalar and matrix LQT instances, reference signals,
the kinetic-term embedding, and the plain-text config loader.

All types are immutable after construction; signal sampling is a pure
function, so instances are safe to share across threads.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Union

import numpy as np

# Relative slack used when checking whether a sample time lies in [0, T];
# grid times are formed as k*dt and may overshoot T by a few ulps.
_TIME_TOL = 1e-9

# Tolerances for the symmetry / definiteness checks on weight matrices.
_SYM_TOL = 1e-10
_PSD_TOL = 1e-10


class SignalKind(enum.Enum):
    """Built-in reference signal families plus the free-form escape hatch."""

    Z1 = "z1"
    Z2 = "z2"
    Z3 = "z3"
    CONSTANT = "constant"
    CUSTOM = "custom"


@dataclass(frozen=True)
class ReferenceSignal:
    """A named, sampleable tracking target z(s) on [0, T].

    The three built-in families share a fixed frequency f and split the
    horizon at T/2:

    * ``Z1``: -5 cos(2*pi*f*s) on [0, T/2], frozen at its T/2 value after
      (continuous on the whole horizon, periodic with period 1/f before T/2).
    * ``Z2``: a decaying two-tone cosine on [0, T/2), a sigmoid
      1/(1 + exp(-s + 2T/3)) on [T/2, T] (one jump at T/2).
    * ``Z3``: a decaying cosine over a growing denominator on [0, T/2),
      the constant 1 on [T/2, T] (one jump at T/2).

    At exactly s = T/2 the discontinuous kinds take the right-hand branch.
    ``CONSTANT`` holds ``value`` everywhere; ``CUSTOM`` delegates to a
    user sampler ``(s, horizon) -> value``.
    """

    kind: SignalKind
    frequency: float = 0.02
    value: float = 0.0
    sampler: Callable[[float, float], float] | None = field(
        default=None, compare=False
    )

    def __post_init__(self):
        if self.kind is SignalKind.CUSTOM and self.sampler is None:
            raise ValueError("CUSTOM signal requires a sampler")
        if self.kind in (SignalKind.Z1, SignalKind.Z2, SignalKind.Z3):
            if not (self.frequency > 0 and math.isfinite(self.frequency)):
                raise ValueError("signal frequency must be positive and finite")

    @classmethod
    def z1(cls, frequency: float = 0.02) -> "ReferenceSignal":
        return cls(SignalKind.Z1, frequency=frequency)

    @classmethod
    def z2(cls, frequency: float = 0.02) -> "ReferenceSignal":
        return cls(SignalKind.Z2, frequency=frequency)

    @classmethod
    def z3(cls, frequency: float = 0.02) -> "ReferenceSignal":
        return cls(SignalKind.Z3, frequency=frequency)

    @classmethod
    def constant(cls, value: float) -> "ReferenceSignal":
        return cls(SignalKind.CONSTANT, value=float(value))

    @classmethod
    def custom(cls, sampler: Callable[[float, float], float]) -> "ReferenceSignal":
        return cls(SignalKind.CUSTOM, sampler=sampler)

    @classmethod
    def named(cls, name: str, frequency: float = 0.02) -> "ReferenceSignal":
        """Look up one of the built-in kinds by its lowercase name."""
        table = {"z1": cls.z1, "z2": cls.z2, "z3": cls.z3}
        try:
            return table[name.lower()](frequency)
        except KeyError:
            raise ValueError(f"unknown signal name {name!r}") from None

    def sample(self, s: float, horizon: float):
        """Evaluate z(s) for s in [0, horizon].

        Raises:
            ValueError: if s lies outside [0, horizon] (beyond a tiny
                relative slack for grid-time roundoff).
        """
        slack = _TIME_TOL * max(1.0, abs(horizon))
        if s < -slack or s > horizon + slack:
            raise ValueError(f"sample time {s} outside [0, {horizon}]")
        s = min(max(s, 0.0), horizon)
        if self.kind is SignalKind.CONSTANT:
            return self.value
        if self.kind is SignalKind.CUSTOM:
            return self.sampler(s, horizon)
        T, f = horizon, self.frequency
        half = T / 2.0
        if self.kind is SignalKind.Z1:
            t = s if s <= half else half
            return -5.0 * math.cos(2.0 * math.pi * f * t)
        if self.kind is SignalKind.Z2:
            if s < half:
                return (-10.0 / T) * (half - s) * (
                    math.cos(2.0 * math.pi * f * s)
                    + 0.3 * math.cos(5.0 * math.pi * f * s)
                )
            return 1.0 / (1.0 + math.exp(-s + 2.0 * T / 3.0))
        # Z3
        if s < half:
            return (10.0 / T) * (half - s) * math.cos(2.0 * math.pi * f * s) / (
                2.0 * math.pi * f * s + 1.0
            )
        return 1.0


def sample_signal(sig: ReferenceSignal, s: float, horizon: float):
    """Functional form of :meth:`ReferenceSignal.sample`."""
    return sig.sample(s, horizon)


@dataclass(frozen=True)
class ScalarLqtProblem:
    """Scalar tracking problem: y' = a*y + b*u, running cost
    q*(y - z(s))**2 / 2 + r*u**2 / 2 over [0, horizon], y(0) = x0.
    """

    a: float
    b: float
    q: float
    r: float
    horizon: float
    x0: float
    signal: ReferenceSignal

    def __post_init__(self):
        if not (self.r > 0 and math.isfinite(self.r)):
            raise ValueError("control weight r must be positive and finite")
        if self.q < 0:
            raise ValueError("tracking weight q must be non-negative")
        if not (self.horizon > 0 and math.isfinite(self.horizon)):
            raise ValueError("horizon must be positive and finite")
        if not math.isfinite(self.s_coef):
            raise ValueError("b**2 / r must be finite")

    @property
    def s_coef(self) -> float:
        """The composite coefficient b**2 / r multiplying the quadratic
        term of the gain equation."""
        return self.b * self.b / self.r


def _as_matrix(x, rows: int | None = None, cols: int | None = None, name: str = "") -> np.ndarray:
    m = np.atleast_2d(np.array(x, dtype=float))
    if rows is not None and m.shape != (rows, cols):
        raise ValueError(f"{name} must have shape ({rows}, {cols}), got {m.shape}")
    return m


def _require_symmetric(m: np.ndarray, name: str):
    scale = max(1.0, float(np.abs(m).max()))
    if np.abs(m - m.T).max() > _SYM_TOL * scale:
        raise ValueError(f"{name} must be symmetric")


def _require_psd(m: np.ndarray, name: str):
    if np.linalg.eigvalsh(m).min() < -_PSD_TOL * max(1.0, float(np.abs(m).max())):
        raise ValueError(f"{name} must be positive semidefinite")


@dataclass(frozen=True)
class MatrixLqtProblem:
    """Matrix tracking problem: y' = A y + B u with running cost
    (y - F z)' Q (y - F z) / 2 + u' R u / 2; terminal weight D enters only
    when the instance is solved as a pure regulator (no tracking signal).

    Q and D must be symmetric PSD, R symmetric positive definite.  There is
    no disturbance feedthrough term (it is identically zero by assumption).
    """

    a_mat: np.ndarray
    b_mat: np.ndarray
    q_mat: np.ndarray
    r_mat: np.ndarray
    f_mat: np.ndarray
    horizon: float
    x0: np.ndarray
    signal: ReferenceSignal
    d_mat: np.ndarray | None = None

    def __post_init__(self):
        a = _as_matrix(self.a_mat, name="A")
        n = a.shape[0]
        if a.shape != (n, n):
            raise ValueError("A must be square")
        b = np.array(self.b_mat, dtype=float)
        if b.ndim == 1:
            b = b.reshape(n, -1)
        if b.shape[0] != n:
            raise ValueError("B must have one row per state")
        m = b.shape[1]
        q = _as_matrix(self.q_mat, n, n, "Q")
        r = _as_matrix(self.r_mat, m, m, "R")
        f = np.array(self.f_mat, dtype=float)
        if f.ndim == 1:
            f = f.reshape(n, -1)
        if f.shape[0] != n:
            raise ValueError("F must have one row per state")
        d = np.zeros((n, n)) if self.d_mat is None else _as_matrix(self.d_mat, n, n, "D")
        x0 = np.array(self.x0, dtype=float).reshape(-1)
        if x0.shape != (n,):
            raise ValueError(f"x0 must be a {n}-vector")

        _require_symmetric(q, "Q")
        _require_symmetric(r, "R")
        _require_symmetric(d, "D")
        _require_psd(q, "Q")
        _require_psd(d, "D")
        if np.linalg.eigvalsh(r).min() <= 0:
            raise ValueError("R must be positive definite")
        if not (self.horizon > 0 and math.isfinite(self.horizon)):
            raise ValueError("horizon must be positive and finite")

        object.__setattr__(self, "a_mat", a)
        object.__setattr__(self, "b_mat", b)
        object.__setattr__(self, "q_mat", q)
        object.__setattr__(self, "r_mat", r)
        object.__setattr__(self, "f_mat", f)
        object.__setattr__(self, "d_mat", d)
        object.__setattr__(self, "x0", x0)

    @property
    def n(self) -> int:
        return self.a_mat.shape[0]

    @property
    def m(self) -> int:
        return self.b_mat.shape[1]

    @property
    def p(self) -> int:
        return self.f_mat.shape[1]


AnyLqtProblem = Union[ScalarLqtProblem, MatrixLqtProblem]


def kinetic_embedding(
    a11: float,
    a12: float,
    b: float,
    q: float,
    r: float,
    horizon: float,
    x0,
    signal: ReferenceSignal,
) -> MatrixLqtProblem:
    """Two-state embedding that penalizes variations of the control.

    The control drives only the second state, whose value feeds the first
    equation; weighting the control therefore weights the time derivative
    of the effective actuation.  Produces the n=2, m=1, p=1 problem

        A = [[a11, a12], [0, 0]],  B = [0, b]',  Q = [[q, 0], [0, 0]],
        F = [1, 0]',               R = [[r]].

    Raises:
        ValueError: if r is zero (or otherwise not a valid control weight).
    """
    if r == 0:
        raise ValueError("control weight r must be nonzero")
    return MatrixLqtProblem(
        a_mat=[[a11, a12], [0.0, 0.0]],
        b_mat=[[0.0], [b]],
        q_mat=[[q, 0.0], [0.0, 0.0]],
        r_mat=[[r]],
        f_mat=[[1.0], [0.0]],
        horizon=horizon,
        x0=x0,
        signal=signal,
    )


def lift_scalar(problem: ScalarLqtProblem) -> MatrixLqtProblem:
    """Embed a scalar problem as the equivalent 1x1 matrix problem."""
    return MatrixLqtProblem(
        a_mat=[[problem.a]],
        b_mat=[[problem.b]],
        q_mat=[[problem.q]],
        r_mat=[[problem.r]],
        f_mat=[[1.0]],
        horizon=problem.horizon,
        x0=[problem.x0],
        signal=problem.signal,
    )


def parse_config(text: str) -> dict:
    """Parse ``key = value`` lines (``#`` comments and blanks ignored).

    Values are returned as strings; callers interpret them.
    """
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def load_problem_config(path) -> tuple[ScalarLqtProblem, float]:
    """Load a scalar problem and step size from a plain-text config file.

    Recognized keys: A, B, Q, R, T, x0, signal, f, dt.  ``signal`` is one
    of z1/z2/z3 or ``constant:<value>``.  Missing keys fall back to the
    benchmark defaults (A=B=Q=1, R=1, T=25, x0=2, signal=z1, f=0.02,
    dt=0.01).

    Returns:
        (problem, dt)
    """
    raw = parse_config(Path(path).read_text())
    f = float(raw.get("f", 0.02))
    name = raw.get("signal", "z1")
    if name.startswith("constant:"):
        signal = ReferenceSignal.constant(float(name.split(":", 1)[1]))
    else:
        signal = ReferenceSignal.named(name, frequency=f)
    problem = ScalarLqtProblem(
        a=float(raw.get("A", 1.0)),
        b=float(raw.get("B", 1.0)),
        q=float(raw.get("Q", 1.0)),
        r=float(raw.get("R", 1.0)),
        horizon=float(raw.get("T", 25.0)),
        x0=float(raw.get("x0", 2.0)),
        signal=signal,
    )
    return problem, float(raw.get("dt", 0.01))
