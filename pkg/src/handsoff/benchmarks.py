"""Built-in benchmark instances."""

from __future__ import annotations

import numpy as np

from handsoff.dynamics import ParameterBox, UncertainLTI
from handsoff.problem import PWCGrid, RobustProblem, TerminalSet


def smd_problem(segments: int = 50, horizon: float = 5.0) -> RobustProblem:
    """Uncertain spring-mass-damper benchmark.

    A(alpha) = [[0, 1], [-2 + a1, 0.6 + a2]], b(alpha) = [0, 1 + a3],
    alpha in [-0.1, 0.1]^3, x(0) = (-1, -1), terminal x1 <= 0.1 and
    x2 <= 0.1.  Segment count defaults to a reduced grid so the solve
    finishes at desk scale.
    """
    system = UncertainLTI(
        a_nominal=[[0.0, 1.0], [-2.0, 0.6]],
        b_nominal=[0.0, 1.0],
        a_terms=(
            [[0.0, 0.0], [1.0, 0.0]],
            [[0.0, 0.0], [0.0, 1.0]],
            [[0.0, 0.0], [0.0, 0.0]],
        ),
        b_terms=(
            [0.0, 0.0],
            [0.0, 0.0],
            [0.0, 1.0],
        ),
    )
    box = ParameterBox([-0.1, -0.1, -0.1], [0.1, 0.1, 0.1])
    terminal = TerminalSet([[1.0, 0.0], [0.0, 1.0]], [0.1, 0.1])
    return RobustProblem(
        system=system,
        box=box,
        grid=PWCGrid(horizon, segments),
        terminal=terminal,
        x0=np.array([-1.0, -1.0]),
    )
