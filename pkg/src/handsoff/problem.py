"""Problem assembly: control grid, objectives, terminal set, constraint rows.

The control is piecewise constant on a uniform grid of N segments over
[0, T], with the indicator basis: one coefficient theta_k per segment and
admissibility |theta_k| <= 1.  The terminal set is an intersection of
affine halfspaces {x : c_j^T x <= d_j}, so each uncertainty realization
reduces the terminal constraint to linear rows in theta.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from handsoff.dynamics import (
    ParameterBox,
    ParameterPoint,
    UncertainLTI,
    _as_vector,
    endpoint_operator,
)

ADMISSIBILITY_TOL = 1e-9


@dataclass(frozen=True)
class PWCGrid:
    """Uniform piecewise-constant grid: N segments of length T/N on [0, T]."""

    horizon: float
    segments: int

    def __post_init__(self):
        if not np.isfinite(self.horizon) or self.horizon <= 0:
            raise ValueError(f"horizon must be positive and finite, got {self.horizon}")
        if int(self.segments) != self.segments or self.segments < 1:
            raise ValueError(f"segments must be a positive integer, got {self.segments}")
        object.__setattr__(self, "horizon", float(self.horizon))
        object.__setattr__(self, "segments", int(self.segments))

    @property
    def h(self) -> float:
        return self.horizon / self.segments

    @property
    def boundaries(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.segments + 1)


@dataclass(frozen=True)
class ControlParams:
    """Coefficient vector of the piecewise-constant control."""

    theta: np.ndarray
    grid: PWCGrid

    def __post_init__(self):
        theta = _as_vector(self.theta, "theta")
        if theta.shape[0] != self.grid.segments:
            raise ValueError(
                f"theta has length {theta.shape[0]}, grid has {self.grid.segments} segments"
            )
        object.__setattr__(self, "theta", theta)


@dataclass(frozen=True)
class TerminalSet:
    """Intersection of halfspaces c_j^T x <= d_j, j = 1..J."""

    normals: np.ndarray  # (J, d)
    offsets: np.ndarray  # (J,)

    def __post_init__(self):
        C = np.atleast_2d(np.asarray(self.normals, dtype=float))
        d = _as_vector(self.offsets, "offsets")
        if C.shape[0] == 0:
            raise ValueError("terminal set needs at least one halfspace row")
        if not np.all(np.isfinite(C)):
            raise ValueError("normals has non-finite entries")
        if C.shape[0] != d.shape[0]:
            raise ValueError(
                f"{C.shape[0]} normal rows but {d.shape[0]} offsets"
            )
        object.__setattr__(self, "normals", C)
        object.__setattr__(self, "offsets", d)

    @property
    def num_rows(self) -> int:
        return self.normals.shape[0]

    def margin(self, x: np.ndarray) -> float:
        """max_j (c_j^T x - d_j); <= 0 iff x is in the set."""
        return float(np.max(self.normals @ np.asarray(x, dtype=float) - self.offsets))

    def margins(self, X: np.ndarray) -> np.ndarray:
        """Vectorized margin for states stacked as rows of X, shape (n, d)."""
        return np.max(X @ self.normals.T - self.offsets, axis=1)


@dataclass(frozen=True)
class RobustProblem:
    """Full robust control instance.

    The control bound is fixed at |u| <= 1; rescale b to change authority.
    """

    system: UncertainLTI
    box: ParameterBox
    grid: PWCGrid
    terminal: TerminalSet
    x0: np.ndarray

    def __post_init__(self):
        x0 = _as_vector(self.x0, "x0")
        d = self.system.dim_state
        if x0.shape != (d,):
            raise ValueError(f"x0 has length {x0.shape[0]}, state dimension is {d}")
        if self.box.dim != self.system.dim_param:
            raise ValueError(
                f"box dimension {self.box.dim} != system parameter dimension {self.system.dim_param}"
            )
        if self.terminal.normals.shape[1] != d:
            raise ValueError(
                f"terminal rows have dimension {self.terminal.normals.shape[1]}, state dimension is {d}"
            )
        object.__setattr__(self, "x0", x0)

    @property
    def control_bound(self) -> float:
        return 1.0


def l1_cost(control: ControlParams) -> float:
    """Integral of |u| over [0, T]: h * sum_k |theta_k| on the uniform grid."""
    return control.grid.h * float(np.sum(np.abs(control.theta)))


def l0_measure(control: ControlParams, zero_tol: float = 1e-6) -> float:
    """Lebesgue measure of the support: h * #{k : |theta_k| > zero_tol}."""
    if zero_tol < 0:
        raise ValueError("zero_tol must be >= 0")
    return control.grid.h * int(np.count_nonzero(np.abs(control.theta) > zero_tol))


def admissibility(control: ControlParams) -> tuple[bool, float]:
    """Whether |theta_k| <= 1 for all k; also returns max_k |theta_k| - 1."""
    violation = float(np.max(np.abs(control.theta)) - 1.0) if control.theta.size else -1.0
    return violation <= ADMISSIBILITY_TOL, violation


def scenario_rows(
    problem: RobustProblem, alpha: ParameterPoint | np.ndarray
) -> list[tuple[np.ndarray, float]]:
    """Linear constraint rows in theta enforcing the terminal set at alpha.

    Row j is (c_j^T G) theta <= d_j - c_j^T m with (m, G) the endpoint
    operator at alpha; an exact affine reduction, no discretization error
    beyond the matrix exponential.
    """
    v = alpha.values if isinstance(alpha, ParameterPoint) else np.asarray(alpha, dtype=float)
    if not problem.box.contains(v, tol=1e-9):
        raise ValueError(f"alpha {v} lies outside the parameter box")
    m, G = endpoint_operator(problem.system, v, problem.grid, problem.x0)
    C = problem.terminal.normals
    d = problem.terminal.offsets
    rows = C @ G
    rhs = d - C @ m
    return [(rows[j], float(rhs[j])) for j in range(C.shape[0])]
