"""Outer loop: global maximization of the relaxed value over scenario tuples.

The robust value equals the maximum of g(x0; p) over tuples p of delta
parameter points, with delta = N (the decision-space dimension).  The
maximization runs simulated annealing over the flattened tuple space
[box]^delta: Gaussian proposals clipped to the box, Metropolis acceptance
on g-values, geometric cooling.  The optimizer sits behind sip_solve's
config so alternative global methods can be swapped in.
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
import os
from dataclasses import dataclass

import numpy as np

from handsoff.inner import InnerSolution, ScenarioTuple, SolverError, solve_inner
from handsoff.problem import ControlParams, RobustProblem

VALUE_CONSISTENCY_TOL = 1e-9


@dataclass(frozen=True)
class AnnealerConfig:
    """Simulated-annealing schedule and stopping rule.

    patience = iterations without best-value improvement before stopping;
    proposal_scale is the per-coordinate Gaussian std as a fraction of the
    box width.
    """

    max_iters: int = 5000
    patience: int = 500
    initial_temperature: float = 1.0
    cooling: float = 0.995
    proposal_scale: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.max_iters < 1 or self.patience < 1:
            raise ValueError("max_iters and patience must be positive")
        if self.initial_temperature <= 0:
            raise ValueError("initial_temperature must be positive")
        if not 0 < self.cooling < 1:
            raise ValueError("cooling must lie in (0, 1)")
        if self.proposal_scale <= 0:
            raise ValueError("proposal_scale must be positive")


@dataclass(frozen=True)
class SipResult:
    """Outcome of the outer maximization.

    status: "solved" (stopping rule hit), "budget_exhausted" (iteration cap
    hit first; value is a lower bound, exactness not claimed), or
    "infeasible" (some tuple's relaxed program, hence the full problem, is
    infeasible).  exactness_guaranteed is False when delta < N.
    """

    value: float
    theta_star: ControlParams | None
    worst_tuple: ScenarioTuple | None
    trace: tuple[tuple[int, float], ...]
    status: str
    delta: int
    exactness_guaranteed: bool

    @property
    def solved(self) -> bool:
        return self.status == "solved"


def _initial_tuple(problem: RobustProblem, delta: int) -> np.ndarray:
    """Box vertices first when they fit in the tuple, centers elsewhere.

    Vertices are frequent worst cases for affine-in-parameter families, so
    seeding them gives the chain a strong incumbent.
    """
    nu = problem.box.dim
    init = np.tile(problem.box.center, (delta, 1))
    if nu > 0 and delta >= 2**nu:
        init[: 2**nu] = problem.box.vertices()
    return init


def sip_solve(
    problem: RobustProblem,
    config: AnnealerConfig | None = None,
    delta: int | None = None,
) -> SipResult:
    """Maximize g(x0; p) over p in [box]^delta and recover the control.

    Strict feasibility of the underlying robust problem is the caller's
    responsibility.  Any infeasible tuple short-circuits to status
    "infeasible".
    """
    config = config or AnnealerConfig()
    N = problem.grid.segments
    delta = N if delta is None else int(delta)
    if delta < 1:
        raise ValueError("delta must be >= 1")
    rng = np.random.default_rng(config.seed)
    nu = problem.box.dim
    width = problem.box.width
    sigma = config.proposal_scale * width  # per-coordinate, zero on degenerate axes

    def g(flat: np.ndarray) -> InnerSolution:
        return solve_inner(problem, ScenarioTuple.from_array(flat.reshape(delta, nu)))

    current = _initial_tuple(problem, delta)
    sol = g(current.ravel())
    if sol.status == "infeasible":
        return SipResult(
            value=np.inf,
            theta_star=None,
            worst_tuple=ScenarioTuple.from_array(current),
            trace=((0, np.inf),),
            status="infeasible",
            delta=delta,
            exactness_guaranteed=delta >= N,
        )
    current = current.ravel()
    current_val = sol.value
    best = current.copy()
    best_val = current_val
    trace = [(0, best_val)]
    temp = config.initial_temperature
    stall = 0
    status = "budget_exhausted"
    for it in range(1, config.max_iters + 1):
        proposal = current + rng.normal(0.0, 1.0, size=current.shape) * np.tile(sigma, delta)
        proposal = np.clip(
            proposal, np.tile(problem.box.lower, delta), np.tile(problem.box.upper, delta)
        )
        sol = g(proposal)
        if sol.status == "infeasible":
            return SipResult(
                value=np.inf,
                theta_star=None,
                worst_tuple=ScenarioTuple.from_array(proposal.reshape(delta, nu)),
                trace=tuple(trace),
                status="infeasible",
                delta=delta,
                exactness_guaranteed=delta >= N,
            )
        # Metropolis step for maximization of g
        if sol.value >= current_val or rng.random() < np.exp(
            (sol.value - current_val) / max(temp, 1e-12)
        ):
            current = proposal
            current_val = sol.value
        if current_val > best_val + 1e-12:
            best = current.copy()
            best_val = current_val
            trace.append((it, best_val))
            stall = 0
        else:
            stall += 1
        temp *= config.cooling
        if stall >= config.patience:
            status = "solved"
            break
    worst = ScenarioTuple.from_array(best.reshape(delta, nu))
    final = solve_inner(problem, worst)  # recover theta* at the incumbent tuple
    if final.status != "optimal":
        raise SolverError("inner solve at the incumbent tuple failed unexpectedly")
    if abs(final.value - best_val) > VALUE_CONSISTENCY_TOL:
        raise SolverError(
            f"value drift between annealing incumbent ({best_val}) and recovery ({final.value})"
        )
    return SipResult(
        value=final.value,
        theta_star=final.theta,
        worst_tuple=worst,
        trace=tuple(trace),
        status=status,
        delta=delta,
        exactness_guaranteed=delta >= N,
    )


def _max_workers(n_tasks: int) -> int:
    env = os.environ.get("HANDSOFF_THREADS")
    cap = int(env) if env else 1
    return max(1, min(cap, n_tasks))


def value_function(
    problem: RobustProblem,
    config: AnnealerConfig,
    x0_list,
    delta: int | None = None,
) -> list[tuple[np.ndarray, float]]:
    """Robust value for a batch of initial states; +inf marks infeasible.

    Entries are independent solves (parallelism capped by HANDSOFF_THREADS);
    per-entry solver failures yield +inf rather than aborting the batch.
    """
    x0s = [np.asarray(x, dtype=float).reshape(-1) for x in x0_list]

    def solve_one(x0: np.ndarray) -> float:
        try:
            res = sip_solve(dataclasses.replace(problem, x0=x0), config, delta)
        except SolverError:
            return np.inf
        return res.value

    workers = _max_workers(len(x0s))
    if workers == 1:
        values = [solve_one(x) for x in x0s]
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(solve_one, x0s))
    return list(zip(x0s, values))
