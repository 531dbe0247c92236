"""Baselines and diagnostics: scenario optimization, Monte Carlo robustness
verification, sparsity/bang-off-bang scoring, and a brute-force ternary
support-measure oracle for desk-scale equivalence checks.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass

import numpy as np

from handsoff.dynamics import ParameterPoint, endpoint_operator
from handsoff.inner import InnerSolution, ScenarioTuple, solve_inner
from handsoff.outer import AnnealerConfig, SipResult, sip_solve
from handsoff.problem import ControlParams, RobustProblem, l0_measure, l1_cost

VIOLATION_TOL = 1e-6
MAX_RECORDED_VIOLATIONS = 50
BRUTE_FORCE_MAX_SEGMENTS = 12


@dataclass(frozen=True)
class VerificationReport:
    samples: int
    violations: int
    worst_margin: float
    violating_alphas: tuple[np.ndarray, ...]  # capped at MAX_RECORDED_VIOLATIONS
    tolerance: float = VIOLATION_TOL

    @property
    def robust(self) -> bool:
        return self.violations == 0


@dataclass(frozen=True)
class SparsityReport:
    l1: float
    l0: float
    bang_off_bang_score: float
    support_segments: tuple[int, ...]


def scenario_solve(
    problem: RobustProblem, num_scenarios: int, seed: int
) -> tuple[InnerSolution, ScenarioTuple]:
    """Scenario-optimization baseline: i.i.d. uniform box samples.

    The sampled program is a relaxation, so its value never exceeds the
    robust value; robustness of the resulting control is probabilistic,
    not certified.
    """
    if num_scenarios < 1:
        raise ValueError("num_scenarios must be >= 1")
    rng = np.random.default_rng(seed)
    tup = ScenarioTuple.from_array(problem.box.sample(rng, num_scenarios))
    return solve_inner(problem, tup), tup


def verify_robust(
    problem: RobustProblem,
    control: ControlParams,
    num_samples: int,
    seed: int,
    include_vertices: bool = True,
) -> VerificationReport:
    """Monte Carlo robustness check of one control over the parameter box.

    Evaluates the terminal margin psi(m(alpha) + G(alpha) theta) at uniform
    samples (plus all box vertices when flagged); margin > tolerance counts
    as a violation.
    """
    rng = np.random.default_rng(seed)
    alphas = problem.box.sample(rng, num_samples)
    if include_vertices:
        alphas = np.vstack([alphas, problem.box.vertices()])
    theta = control.theta
    margins = np.empty(alphas.shape[0])
    for i, a in enumerate(alphas):
        m, G = endpoint_operator(problem.system, a, problem.grid, problem.x0)
        margins[i] = problem.terminal.margin(m + G @ theta)
    bad = margins > VIOLATION_TOL
    recorded = tuple(alphas[np.flatnonzero(bad)[:MAX_RECORDED_VIOLATIONS]])
    return VerificationReport(
        samples=alphas.shape[0],
        violations=int(np.count_nonzero(bad)),
        worst_margin=float(np.max(margins)),
        violating_alphas=recorded,
    )


def sparsity_report(
    control: ControlParams, eps_zero: float = 1e-6, eps_bob: float = 1e-3
) -> SparsityReport:
    """L1/L0 summary plus the bang-off-bang structure score.

    The score is the fraction of segments whose level is within eps_bob of
    {-1, 0, +1}; a score of 1 with exact ternary levels makes the L1 cost
    equal the support measure.
    """
    theta = np.abs(control.theta)
    near_ternary = np.minimum(theta, np.abs(1.0 - theta)) <= eps_bob
    support = tuple(int(k) for k in np.flatnonzero(theta > eps_zero))
    return SparsityReport(
        l1=l1_cost(control),
        l0=l0_measure(control, eps_zero),
        bang_off_bang_score=float(np.mean(near_ternary)),
        support_segments=support,
    )


def brute_force_l0(
    problem: RobustProblem, alpha_grid, feas_tol: float = 1e-9
) -> tuple[float, ControlParams | None]:
    """Minimal support measure over ternary controls feasible on an alpha grid.

    Enumerates theta in {-1, 0, +1}^N against the stacked constraint rows of
    every grid point; returns +inf with no witness when nothing is feasible.
    Ties break lexicographically so the result is deterministic.
    """
    N = problem.grid.segments
    if N > BRUTE_FORCE_MAX_SEGMENTS:
        raise ValueError(
            f"ternary enumeration needs N <= {BRUTE_FORCE_MAX_SEGMENTS}, got {N}"
        )
    rows = []
    rhs = []
    for alpha in alpha_grid:
        a = alpha.values if isinstance(alpha, ParameterPoint) else np.asarray(alpha, dtype=float)
        m, G = endpoint_operator(problem.system, a, problem.grid, problem.x0)
        rows.append(problem.terminal.normals @ G)
        rhs.append(problem.terminal.offsets - problem.terminal.normals @ m)
    R = np.vstack(rows)
    r = np.concatenate(rhs)
    candidates = np.array(list(itertools.product((-1.0, 0.0, 1.0), repeat=N)))
    feasible = np.all(candidates @ R.T <= r + feas_tol, axis=1)
    if not np.any(feasible):
        return np.inf, None
    feas = candidates[feasible]
    supports = np.count_nonzero(feas, axis=1)
    best_support = supports.min()
    # lexicographic tie-break among minimal-support candidates
    pool = feas[supports == best_support]
    order = np.lexsort(pool.T[::-1])
    witness = ControlParams(pool[order[0]], problem.grid)
    return problem.grid.h * float(best_support), witness


@dataclass(frozen=True)
class ComparisonRow:
    method: str
    value_weighted: float       # h * sum |theta_k|
    value_unweighted: float     # sum |theta_k|
    runtime_s: float
    violations: int | None
    status: str


@dataclass(frozen=True)
class ComparisonTable:
    rows: tuple[ComparisonRow, ...]
    sip: SipResult


def compare_report(
    problem: RobustProblem,
    config: AnnealerConfig,
    scenario_counts,
    delta: int | None = None,
    verify_samples: int = 10_000,
    verify_seed: int = 0,
) -> ComparisonTable:
    """Side-by-side table: exact SIP solve vs scenario baselines.

    Each row carries both cost scales, wall time, and the Monte Carlo
    violation count of the recovered control; per-row failures are recorded
    instead of aborting the sweep.
    """
    rows = []
    t0 = time.perf_counter()
    sip = sip_solve(problem, config, delta)
    sip_time = time.perf_counter() - t0
    if sip.theta_star is not None:
        rep = verify_robust(problem, sip.theta_star, verify_samples, verify_seed)
        rows.append(
            ComparisonRow(
                method="sip",
                value_weighted=sip.value,
                value_unweighted=sip.value / problem.grid.h,
                runtime_s=sip_time,
                violations=rep.violations,
                status=sip.status,
            )
        )
    else:
        rows.append(
            ComparisonRow("sip", np.inf, np.inf, sip_time, None, sip.status)
        )
    for count in scenario_counts:
        t0 = time.perf_counter()
        try:
            sol, _ = scenario_solve(problem, count, seed=config.seed + count)
        except Exception:
            rows.append(
                ComparisonRow(f"scenario_{count}", np.nan, np.nan, 0.0, None, "error")
            )
            continue
        elapsed = time.perf_counter() - t0
        if sol.optimal:
            rep = verify_robust(problem, sol.theta, verify_samples, verify_seed)
            rows.append(
                ComparisonRow(
                    method=f"scenario_{count}",
                    value_weighted=sol.value,
                    value_unweighted=sol.value / problem.grid.h,
                    runtime_s=elapsed,
                    violations=rep.violations,
                    status=sol.status,
                )
            )
        else:
            rows.append(
                ComparisonRow(f"scenario_{count}", np.inf, np.inf, elapsed, None, sol.status)
            )
    return ComparisonTable(rows=tuple(rows), sip=sip)
