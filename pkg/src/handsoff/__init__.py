"""Robust maximum hands-off control of uncertain LTI systems.

Computes L1-optimal piecewise-constant controls that satisfy terminal
constraints for every parameter in a compact uncertainty box, via an exact
scheme pairing an inner linear program with an outer global maximization
over sampled uncertainty tuples.  Ships a scenario-optimization baseline,
Monte Carlo robustness verification, and sparsity diagnostics.
"""

from handsoff.dynamics import (
    ParameterBox,
    ParameterPoint,
    UncertainLTI,
    endpoint_operator,
    eval_system,
    input_integral,
    simulate_trajectory,
    transition,
)
from handsoff.problem import (
    ControlParams,
    PWCGrid,
    RobustProblem,
    TerminalSet,
    admissibility,
    l0_measure,
    l1_cost,
    scenario_rows,
)
from handsoff.inner import (
    FiniteProgram,
    InnerSolution,
    ScenarioTuple,
    SolverError,
    build_lp,
    solve_inner,
)
from handsoff.outer import AnnealerConfig, SipResult, sip_solve, value_function
from handsoff.analysis import (
    SparsityReport,
    VerificationReport,
    brute_force_l0,
    compare_report,
    scenario_solve,
    sparsity_report,
    verify_robust,
)
from handsoff.benchmarks import smd_problem

__version__ = "0.1.0"

__all__ = [
    "AnnealerConfig",
    "ControlParams",
    "FiniteProgram",
    "InnerSolution",
    "PWCGrid",
    "ParameterBox",
    "ParameterPoint",
    "RobustProblem",
    "ScenarioTuple",
    "SipResult",
    "SolverError",
    "SparsityReport",
    "TerminalSet",
    "UncertainLTI",
    "VerificationReport",
    "admissibility",
    "brute_force_l0",
    "build_lp",
    "compare_report",
    "endpoint_operator",
    "eval_system",
    "input_integral",
    "l0_measure",
    "l1_cost",
    "scenario_rows",
    "scenario_solve",
    "simulate_trajectory",
    "sip_solve",
    "smd_problem",
    "solve_inner",
    "sparsity_report",
    "transition",
    "value_function",
    "verify_robust",
]
