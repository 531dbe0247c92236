"""Exact propagation of uncertain LTI systems.

The system family is affine in the uncertain parameter:

    dx/dt = A(alpha) x + b(alpha) u,
    A(alpha) = A0 + sum_i alpha_i * A_i,
    b(alpha) = b0 + sum_i alpha_i * b_i,

with alpha ranging over an axis-aligned box.  All operations here are pure
functions of immutable value objects and are safe to share across threads.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm


def _as_matrix(value, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def _as_vector(value, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


@dataclass(frozen=True)
class UncertainLTI:
    """Affine-in-parameter system matrices A(alpha), b(alpha)."""

    a_nominal: np.ndarray
    b_nominal: np.ndarray
    a_terms: tuple[np.ndarray, ...] = ()
    b_terms: tuple[np.ndarray, ...] = ()

    def __post_init__(self):
        a0 = _as_matrix(self.a_nominal, "a_nominal")
        b0 = _as_vector(self.b_nominal, "b_nominal")
        d = a0.shape[0]
        if b0.shape != (d,):
            raise ValueError(
                f"b_nominal has length {b0.shape[0]}, expected {d}"
            )
        a_terms = tuple(_as_matrix(a, f"a_terms[{i}]") for i, a in enumerate(self.a_terms))
        b_terms = tuple(_as_vector(b, f"b_terms[{i}]") for i, b in enumerate(self.b_terms))
        if len(a_terms) != len(b_terms):
            raise ValueError(
                f"a_terms ({len(a_terms)}) and b_terms ({len(b_terms)}) must have equal length"
            )
        for i, a in enumerate(a_terms):
            if a.shape != (d, d):
                raise ValueError(f"a_terms[{i}] has shape {a.shape}, expected {(d, d)}")
        for i, b in enumerate(b_terms):
            if b.shape != (d,):
                raise ValueError(f"b_terms[{i}] has length {b.shape[0]}, expected {d}")
        object.__setattr__(self, "a_nominal", a0)
        object.__setattr__(self, "b_nominal", b0)
        object.__setattr__(self, "a_terms", a_terms)
        object.__setattr__(self, "b_terms", b_terms)

    @property
    def dim_state(self) -> int:
        return self.a_nominal.shape[0]

    @property
    def dim_param(self) -> int:
        return len(self.a_terms)


@dataclass(frozen=True)
class ParameterBox:
    """Axis-aligned box of uncertain parameters."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = _as_vector(self.lower, "lower")
        hi = _as_vector(self.upper, "upper")
        if lo.shape != hi.shape:
            raise ValueError("lower and upper must have equal length")
        if np.any(lo > hi):
            raise ValueError("lower must be <= upper componentwise")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def contains(self, alpha: "ParameterPoint | np.ndarray", tol: float = 1e-12) -> bool:
        v = alpha.values if isinstance(alpha, ParameterPoint) else np.asarray(alpha, dtype=float)
        return bool(np.all(v >= self.lower - tol) and np.all(v <= self.upper + tol))

    def clip(self, values: np.ndarray) -> np.ndarray:
        return np.clip(values, self.lower, self.upper)

    def vertices(self) -> np.ndarray:
        """All 2^dim corner points, shape (2^dim, dim)."""
        corners = itertools.product(*zip(self.lower, self.upper))
        return np.array(list(corners), dtype=float).reshape(-1, self.dim)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """n i.i.d. uniform draws, shape (n, dim)."""
        return rng.uniform(self.lower, self.upper, size=(n, self.dim))


@dataclass(frozen=True)
class ParameterPoint:
    """One realization of the uncertain parameter vector."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _as_vector(self.values, "values"))


def eval_system(sys: UncertainLTI, alpha: ParameterPoint | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate (A(alpha), b(alpha)) for one parameter realization."""
    v = alpha.values if isinstance(alpha, ParameterPoint) else _as_vector(alpha, "alpha")
    if v.shape[0] != sys.dim_param:
        raise ValueError(f"alpha has length {v.shape[0]}, expected {sys.dim_param}")
    A = sys.a_nominal.copy()
    b = sys.b_nominal.copy()
    for ai, (At, bt) in zip(v, zip(sys.a_terms, sys.b_terms)):
        A += ai * At
        b += ai * bt
    return A, b


def transition(A: np.ndarray, h: float) -> np.ndarray:
    """State-transition matrix e^{A h} (scaling-and-squaring Pade)."""
    A = _as_matrix(A, "A")
    if not np.isfinite(h) or h < 0:
        raise ValueError(f"duration must be finite and >= 0, got {h}")
    return expm(A * h)


def input_integral(A: np.ndarray, b: np.ndarray, h: float) -> np.ndarray:
    """Integral of e^{A s} b over [0, h], via the augmented-block exponential.

    exp([[A, b], [0, 0]] * h) has e^{Ah} in the top-left block and the
    requested integral in the top-right column.
    """
    A = _as_matrix(A, "A")
    b = _as_vector(b, "b")
    d = A.shape[0]
    if b.shape != (d,):
        raise ValueError(f"b has length {b.shape[0]}, expected {d}")
    if not np.isfinite(h) or h < 0:
        raise ValueError(f"duration must be finite and >= 0, got {h}")
    M = np.zeros((d + 1, d + 1))
    M[:d, :d] = A
    M[:d, d] = b
    return expm(M * h)[:d, d]


def endpoint_operator(
    sys: UncertainLTI,
    alpha: ParameterPoint | np.ndarray,
    grid,
    x0: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Affine endpoint map of the piecewise-constant control parametrization.

    Returns (m, G) with m = e^{A(alpha) T} x0 and G of shape (d, N) such
    that the terminal state is m + G @ theta for any coefficient vector.
    Column k is e^{A(alpha)(T - t_k)} * int_0^h e^{A(alpha)s} b(alpha) ds,
    accumulated backward so each segment costs one matrix product.
    """
    A, b = eval_system(sys, alpha)
    x0 = _as_vector(x0, "x0")
    d = sys.dim_state
    if x0.shape != (d,):
        raise ValueError(f"x0 has length {x0.shape[0]}, expected {d}")
    N = grid.segments
    h = grid.h
    E = transition(A, h)
    v = input_integral(A, b, h)
    G = np.empty((d, N))
    Phi = np.eye(d)  # accumulates e^{A (T - t_k)}, walking k = N down to 1
    for k in range(N - 1, -1, -1):
        G[:, k] = Phi @ v
        Phi = Phi @ E
    m = Phi @ x0
    return m, G


def simulate_trajectory(
    sys: UncertainLTI,
    alpha: ParameterPoint | np.ndarray,
    x0: np.ndarray,
    control,
    samples_per_segment: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Dense exact readout of the controlled trajectory.

    Propagates segment-by-segment with sub-step transition matrices; the
    result is exact up to matrix-exponential accuracy, not an ODE
    approximation.  Returns (times, states) with times of length
    N * samples_per_segment + 1 and states of shape (len(times), d).
    """
    if samples_per_segment < 1:
        raise ValueError("samples_per_segment must be >= 1")
    A, b = eval_system(sys, alpha)
    x0 = _as_vector(x0, "x0")
    grid = control.grid
    N = grid.segments
    h = grid.h
    hs = h / samples_per_segment
    E = transition(A, hs)
    v = input_integral(A, b, hs)
    times = np.empty(N * samples_per_segment + 1)
    states = np.empty((N * samples_per_segment + 1, sys.dim_state))
    times[0] = 0.0
    states[0] = x0
    x = x0
    idx = 1
    for k in range(N):
        theta_k = control.theta[k]
        for j in range(samples_per_segment):
            x = E @ x + theta_k * v
            times[idx] = k * h + (j + 1) * hs
            states[idx] = x
            idx += 1
    return times, states
