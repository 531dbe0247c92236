import numpy as np
import pytest

from handsoff.analysis import (
    brute_force_l0,
    compare_report,
    scenario_solve,
    sparsity_report,
    verify_robust,
)
from handsoff.benchmarks import smd_problem
from handsoff.dynamics import ParameterBox, UncertainLTI, simulate_trajectory
from handsoff.inner import ScenarioTuple, solve_inner
from handsoff.outer import AnnealerConfig, sip_solve
from handsoff.problem import (
    ControlParams,
    PWCGrid,
    RobustProblem,
    TerminalSet,
    l0_measure,
    l1_cost,
)


class TestScenarioSolve:
    def test_degenerate_box_equals_fixed_point(self):
        sys = UncertainLTI(
            a_nominal=[[0.0, 1.0], [-2.0, 0.6]],
            b_nominal=[0.0, 1.0],
            a_terms=([[0, 0], [1, 0]],),
            b_terms=([0, 0],),
        )
        prob = RobustProblem(
            sys,
            ParameterBox([0.02], [0.02]),
            PWCGrid(5.0, 8),
            TerminalSet([[1.0, 0.0], [0.0, 1.0]], [0.1, 0.1]),
            np.array([-1.0, -1.0]),
        )
        sol, tup = scenario_solve(prob, 1, seed=0)
        fixed = solve_inner(prob, ScenarioTuple.from_array(np.array([[0.02]])))
        assert sol.value == pytest.approx(fixed.value, abs=1e-12)
        np.testing.assert_allclose(tup.as_array(), [[0.02]])

    def test_invalid_count_rejected(self):
        with pytest.raises(ValueError):
            scenario_solve(smd_problem(5), 0, seed=0)

    def test_never_exceeds_sip_value(self):
        prob = smd_problem(10)
        sip = sip_solve(prob, AnnealerConfig(max_iters=1500, patience=300, seed=0))
        for seed in range(3):
            sol, _ = scenario_solve(prob, 100, seed)
            assert sol.value <= sip.value + 1e-9


class TestVerifyRobust:
    def test_unconstrained_never_violates(self):
        prob = smd_problem(5)
        prob = RobustProblem(
            prob.system,
            prob.box,
            prob.grid,
            TerminalSet([[1.0, 0.0], [0.0, 1.0]], [1e6, 1e6]),
            prob.x0,
        )
        rep = verify_robust(prob, ControlParams(np.zeros(5), prob.grid), 200, seed=0)
        assert rep.violations == 0
        assert rep.worst_margin < 0

    def test_zero_control_smd_violates(self):
        prob = smd_problem(10)
        control = ControlParams(np.zeros(10), prob.grid)
        rep = verify_robust(prob, control, 200, seed=1)
        assert rep.violations > 0
        assert rep.worst_margin > 0
        # cross-check the worst recorded sample against dense simulation
        alpha = rep.violating_alphas[0]
        _, states = simulate_trajectory(prob.system, alpha, prob.x0, control, 4)
        assert prob.terminal.margin(states[-1]) > 0

    def test_margins_match_simulation(self):
        prob = smd_problem(8)
        rng = np.random.default_rng(2)
        control = ControlParams(rng.uniform(-1, 1, 8), prob.grid)
        rep = verify_robust(prob, control, 50, seed=3, include_vertices=False)
        # recompute the worst margin over the same seeded samples via simulation
        alphas = prob.box.sample(np.random.default_rng(3), 50)
        margins = []
        for a in alphas:
            _, states = simulate_trajectory(prob.system, a, prob.x0, control, 4)
            margins.append(prob.terminal.margin(states[-1]))
        assert rep.worst_margin == pytest.approx(max(margins), abs=1e-8)

    def test_vertices_included_in_count(self):
        prob = smd_problem(5)
        control = ControlParams(np.zeros(5), prob.grid)
        rep = verify_robust(prob, control, 10, seed=0, include_vertices=True)
        assert rep.samples == 10 + 8


class TestSparsityReport:
    def test_ternary_scores_one(self):
        grid = PWCGrid(2.0, 4)
        rep = sparsity_report(ControlParams(np.array([1.0, 0.0, -1.0, 1.0]), grid))
        assert rep.bang_off_bang_score == 1.0
        assert rep.l0 == pytest.approx(rep.l1)
        assert rep.support_segments == (0, 2, 3)

    def test_fractional_level(self):
        grid = PWCGrid(4.0, 4)
        rep = sparsity_report(ControlParams(np.array([0.5, 0.0, 0.0, 0.0]), grid))
        assert rep.bang_off_bang_score == pytest.approx(3 / 4)
        assert rep.l1 == pytest.approx(0.5)
        assert rep.l0 == pytest.approx(1.0)

    def test_l1_never_exceeds_l0(self):
        rng = np.random.default_rng(4)
        grid = PWCGrid(1.0, 12)
        for _ in range(100):
            rep = sparsity_report(ControlParams(rng.uniform(-1, 1, 12), grid))
            assert rep.l1 <= rep.l0 + 1e-12


class TestBruteForceL0:
    def test_integrator_single_segment(self):
        sys = UncertainLTI(a_nominal=[[0.0]], b_nominal=[1.0])
        prob = RobustProblem(
            sys,
            ParameterBox(np.zeros(0), np.zeros(0)),
            PWCGrid(1.0, 1),
            TerminalSet([[-1.0]], [-0.5]),  # x(1) >= 0.5 from x0 = 0
            np.array([0.0]),
        )
        min_l0, witness = brute_force_l0(prob, [np.zeros(0)])
        assert min_l0 == pytest.approx(1.0)
        np.testing.assert_allclose(witness.theta, [1.0])
        # the L1 solution has the same support measure
        sol = solve_inner(prob, ScenarioTuple((np.zeros(0),)))
        assert l0_measure(sol.theta) == pytest.approx(min_l0)

    def test_infeasible_returns_inf(self):
        sys = UncertainLTI(a_nominal=[[0.0]], b_nominal=[1.0])
        prob = RobustProblem(
            sys,
            ParameterBox(np.zeros(0), np.zeros(0)),
            PWCGrid(1.0, 2),
            TerminalSet([[-1.0]], [-5.0]),
            np.array([0.0]),
        )
        min_l0, witness = brute_force_l0(prob, [np.zeros(0)])
        assert min_l0 == np.inf
        assert witness is None

    def test_budget_cap_enforced(self):
        prob = smd_problem(13)
        with pytest.raises(ValueError):
            brute_force_l0(prob, [np.zeros(3)])

    def test_witness_is_feasible_on_grid(self):
        prob = smd_problem(6)
        grid_alphas = [np.array([a, a, a]) for a in (-0.1, 0.0, 0.1)]
        min_l0, witness = brute_force_l0(prob, grid_alphas)
        assert np.isfinite(min_l0)
        from handsoff.problem import scenario_rows

        for a in grid_alphas:
            for row, rhs in scenario_rows(prob, a):
                assert row @ witness.theta <= rhs + 1e-9


class TestCompareReport:
    def test_sip_only_when_no_counts(self):
        prob = smd_problem(6)
        table = compare_report(
            prob, AnnealerConfig(max_iters=300, patience=100, seed=0), [], verify_samples=100
        )
        assert len(table.rows) == 1
        assert table.rows[0].method == "sip"

    def test_scenario_rows_bounded_by_sip(self):
        prob = smd_problem(8)
        table = compare_report(
            prob,
            AnnealerConfig(max_iters=600, patience=150, seed=0),
            [50, 200],
            verify_samples=200,
        )
        sip_value = table.rows[0].value_weighted
        for row in table.rows[1:]:
            assert row.value_weighted <= sip_value + 1e-9
        assert table.rows[0].value_unweighted == pytest.approx(sip_value / prob.grid.h)

    def test_reproducible_with_fixed_seeds(self):
        prob = smd_problem(6)
        cfg = AnnealerConfig(max_iters=300, patience=100, seed=1)
        t1 = compare_report(prob, cfg, [20], verify_samples=100)
        t2 = compare_report(prob, cfg, [20], verify_samples=100)
        for r1, r2 in zip(t1.rows, t2.rows):
            assert r1.value_weighted == r2.value_weighted
            assert r1.violations == r2.violations
