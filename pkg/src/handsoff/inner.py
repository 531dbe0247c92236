"""Inner relaxed program: L1-optimal control for finitely many scenarios.

For a tuple of parameter points, the terminal constraints reduce to linear
rows in theta, and the h-weighted L1 objective splits with epigraph
variables s_k >= |theta_k|, giving a plain LP:

    min  h * sum(s)
    s.t. theta_k - s_k <= 0,  -theta_k - s_k <= 0      (epigraph)
         theta_k <= 1,        -theta_k <= 1            (admissibility)
         (c_j^T G(a)) theta <= d_j - c_j^T m(a)        per scenario point

An infeasible LP certifies, by relaxation monotonicity, that the full
semi-infinite problem is infeasible for this initial state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from handsoff.dynamics import ParameterBox, ParameterPoint
from handsoff.problem import ControlParams, RobustProblem, l1_cost, scenario_rows

OPTIMALITY_TOL = 1e-8


class SolverError(RuntimeError):
    """Numerical failure of the LP solver (not infeasibility)."""


@dataclass(frozen=True)
class ScenarioTuple:
    """Ordered tuple of parameter points indexing the relaxed program."""

    points: tuple[ParameterPoint, ...]

    def __post_init__(self):
        pts = tuple(
            p if isinstance(p, ParameterPoint) else ParameterPoint(np.asarray(p, dtype=float))
            for p in self.points
        )
        if len(pts) < 1:
            raise ValueError("scenario tuple must contain at least one point")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)

    def as_array(self) -> np.ndarray:
        """Points stacked as rows, shape (delta, nu)."""
        return np.array([p.values for p in self.points])

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "ScenarioTuple":
        arr = np.atleast_2d(np.asarray(arr, dtype=float))
        return cls(tuple(ParameterPoint(row) for row in arr))

    def validate_in(self, box: ParameterBox) -> None:
        for i, p in enumerate(self.points):
            if not box.contains(p, tol=1e-9):
                raise ValueError(f"scenario point {i} = {p.values} lies outside the box")


@dataclass(frozen=True)
class FiniteProgram:
    """Dense LP data over z = (theta, s) in R^{2N}."""

    c: np.ndarray        # objective, length 2N
    a_ub: np.ndarray     # (4N + delta*J, 2N)
    b_ub: np.ndarray
    n_theta: int
    h: float


@dataclass(frozen=True)
class InnerSolution:
    status: str          # "optimal" | "infeasible"
    value: float         # +inf iff infeasible
    theta: ControlParams | None
    kkt_residual: float

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def build_lp(problem: RobustProblem, tup: ScenarioTuple) -> FiniteProgram:
    """Assemble the epigraph LP for one scenario tuple."""
    tup.validate_in(problem.box)
    N = problem.grid.segments
    h = problem.grid.h
    I = np.eye(N)
    Z = np.zeros((N, N))
    blocks = [
        np.hstack([I, -I]),    # theta - s <= 0
        np.hstack([-I, -I]),   # -theta - s <= 0
        np.hstack([I, Z]),     # theta <= 1
        np.hstack([-I, Z]),    # -theta <= 1
    ]
    rhs = [np.zeros(N), np.zeros(N), np.ones(N), np.ones(N)]
    for point in tup.points:
        for row, r in scenario_rows(problem, point):
            blocks.append(np.concatenate([row, np.zeros(N)])[None, :])
            rhs.append(np.array([r]))
    c = np.concatenate([np.zeros(N), h * np.ones(N)])
    return FiniteProgram(
        c=c,
        a_ub=np.vstack(blocks),
        b_ub=np.concatenate(rhs),
        n_theta=N,
        h=h,
    )


def _kkt_residual(prog: FiniteProgram, res) -> float:
    """Max of primal infeasibility, stationarity, and complementarity gaps."""
    z = res.x
    slack = prog.b_ub - prog.a_ub @ z
    primal = max(0.0, float(-np.min(slack)))
    lam = -res.ineqlin.marginals  # duals of A z <= b, nonnegative
    dual_feas = max(0.0, float(-np.min(lam)))
    stationarity = float(np.max(np.abs(prog.c + prog.a_ub.T @ lam)))
    complementarity = float(np.max(np.abs(lam * slack)))
    return max(primal, dual_feas, stationarity, complementarity)


def solve_inner(problem: RobustProblem, tup: ScenarioTuple) -> InnerSolution:
    """Solve the relaxed program exactly (HiGHS dual simplex).

    The minimizer is a vertex solution and may be non-unique; the value,
    not the minimizer, carries the exactness guarantee.
    """
    prog = build_lp(problem, tup)
    res = linprog(
        prog.c,
        A_ub=prog.a_ub,
        b_ub=prog.b_ub,
        bounds=(None, None),
        method="highs",
    )
    if res.status == 2:
        return InnerSolution(status="infeasible", value=np.inf, theta=None, kkt_residual=np.nan)
    if not res.success:
        raise SolverError(f"LP solver failed (status {res.status}): {res.message}")
    theta = ControlParams(res.x[: prog.n_theta], problem.grid)
    value = l1_cost(theta)
    return InnerSolution(
        status="optimal",
        value=value,
        theta=theta,
        kkt_residual=_kkt_residual(prog, res),
    )
