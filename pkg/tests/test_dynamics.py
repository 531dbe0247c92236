import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

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
from handsoff.problem import ControlParams, PWCGrid

from oracles import rk4_endpoint, simpson_input_integral, taylor_expm


def smd_system():
    return UncertainLTI(
        a_nominal=[[0.0, 1.0], [-2.0, 0.6]],
        b_nominal=[0.0, 1.0],
        a_terms=([[0, 0], [1, 0]], [[0, 0], [0, 1]], [[0, 0], [0, 0]]),
        b_terms=([0, 0], [0, 0], [0, 1]),
    )


class TestEvalSystem:
    def test_at_origin_returns_nominal(self):
        sys = smd_system()
        A, b = eval_system(sys, np.zeros(3))
        np.testing.assert_array_equal(A, sys.a_nominal)
        np.testing.assert_array_equal(b, sys.b_nominal)

    def test_smd_at_point_one(self):
        A, b = eval_system(smd_system(), np.array([0.1, 0.1, 0.1]))
        np.testing.assert_allclose(A, [[0.0, 1.0], [-1.9, 0.7]])
        np.testing.assert_allclose(b, [0.0, 1.1])

    def test_single_identity_term(self):
        sys = UncertainLTI(
            a_nominal=[[1.0, 2.0], [3.0, 4.0]],
            b_nominal=[0.0, 0.0],
            a_terms=(np.eye(2),),
            b_terms=(np.zeros(2),),
        )
        A, _ = eval_system(sys, [0.7])
        np.testing.assert_allclose(A, sys.a_nominal + 0.7 * np.eye(2))

    def test_dimension_mismatch_raises(self):
        with pytest.raises(ValueError):
            eval_system(smd_system(), np.zeros(2))

    def test_mismatched_term_counts_rejected(self):
        with pytest.raises(ValueError):
            UncertainLTI(a_nominal=[[0.0]], b_nominal=[1.0], a_terms=([[1.0]],), b_terms=())


class TestTransition:
    def test_zero_matrix_gives_identity(self):
        np.testing.assert_array_equal(transition(np.zeros((3, 3)), 1.7), np.eye(3))

    def test_diagonal_case(self):
        a = np.array([0.3, -1.2, 2.0])
        E = transition(np.diag(a), 0.5)
        np.testing.assert_allclose(E, np.diag(np.exp(a * 0.5)), rtol=1e-13)

    def test_nominal_smd_vs_taylor_oracle(self):
        A = np.array([[0.0, 1.0], [-2.0, 0.6]])
        E = transition(A, 0.02)
        ref = taylor_expm(A, 0.02, terms=30)
        assert np.linalg.norm(E - ref) / np.linalg.norm(ref) <= 1e-12

    def test_negative_duration_rejected(self):
        with pytest.raises(ValueError):
            transition(np.eye(2), -0.1)

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            transition(np.array([[np.nan, 0.0], [0.0, 0.0]]), 1.0)

    @settings(max_examples=25, deadline=None)
    @given(
        st.integers(min_value=1, max_value=6),
        st.floats(min_value=0.01, max_value=0.8),
        st.floats(min_value=0.01, max_value=0.8),
        st.integers(min_value=0, max_value=2**31 - 1),
    )
    def test_semigroup_property(self, d, h1, h2, seed):
        A = np.random.default_rng(seed).normal(0, 1, (d, d))
        lhs = transition(A, h1) @ transition(A, h2)
        rhs = transition(A, h1 + h2)
        assert np.max(np.abs(lhs - rhs)) <= 1e-10 * max(1.0, np.max(np.abs(rhs)))


class TestInputIntegral:
    def test_zero_matrix(self):
        b = np.array([1.0, -2.0])
        np.testing.assert_allclose(input_integral(np.zeros((2, 2)), b, 0.3), 0.3 * b, atol=1e-14)

    def test_scalar_analytic(self):
        a, h = -0.8, 0.4
        out = input_integral(np.array([[a]]), np.array([1.0]), h)
        np.testing.assert_allclose(out, [(np.exp(a * h) - 1.0) / a], rtol=1e-12)

    def test_nominal_smd_vs_simpson(self):
        A = np.array([[0.0, 1.0], [-2.0, 0.6]])
        b = np.array([0.0, 1.0])
        out = input_integral(A, b, 0.02)
        ref = simpson_input_integral(A, b, 0.02, panels=10_000)
        assert np.linalg.norm(out - ref) / np.linalg.norm(ref) <= 1e-8


class TestEndpointOperator:
    def test_zero_control_matches_free_flow(self):
        sys = smd_system()
        grid = PWCGrid(5.0, 10)
        x0 = np.array([-1.0, -1.0])
        for alpha in ([0.0, 0.0, 0.0], [0.1, -0.1, 0.05]):
            m, G = endpoint_operator(sys, np.array(alpha), grid, x0)
            A, _ = eval_system(sys, np.array(alpha))
            np.testing.assert_allclose(m, transition(A, 5.0) @ x0, rtol=1e-12)
            np.testing.assert_allclose(m + G @ np.zeros(10), m)

    def test_integrator_columns(self):
        sys = UncertainLTI(a_nominal=np.zeros((2, 2)), b_nominal=[1.0, 2.0])
        grid = PWCGrid(1.0, 4)
        x0 = np.array([0.3, -0.4])
        m, G = endpoint_operator(sys, np.zeros(0), grid, x0)
        np.testing.assert_allclose(m, x0)
        for k in range(4):
            np.testing.assert_allclose(G[:, k], grid.h * np.array([1.0, 2.0]), atol=1e-14)

    def test_smd_all_ones_vs_rk4(self):
        sys = smd_system()
        grid = PWCGrid(5.0, 10)
        x0 = np.array([-1.0, -1.0])
        theta = np.ones(10)
        m, G = endpoint_operator(sys, np.zeros(3), grid, x0)
        ref = rk4_endpoint(sys, np.zeros(3), x0, ControlParams(theta, grid), dt=1e-4)
        np.testing.assert_allclose(m + G @ theta, ref, atol=1e-6)

    def test_affine_in_theta(self):
        sys = smd_system()
        grid = PWCGrid(2.0, 6)
        x0 = np.array([0.5, -0.5])
        rng = np.random.default_rng(7)
        m, G = endpoint_operator(sys, np.array([0.05, 0.0, -0.05]), grid, x0)
        t1, t2 = rng.uniform(-1, 1, (2, 6))
        lhs = (m + G @ (t1 + t2)) - m
        rhs = ((m + G @ t1) - m) + ((m + G @ t2) - m)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_lipschitz_in_alpha_smoke(self):
        sys = smd_system()
        grid = PWCGrid(5.0, 8)
        x0 = np.array([-1.0, -1.0])
        rng = np.random.default_rng(11)
        ratios = []
        for _ in range(20):
            a1 = rng.uniform(-0.1, 0.1, 3)
            a2 = a1 + rng.normal(0, 1e-4, 3)
            a2 = np.clip(a2, -0.1, 0.1)
            _, G1 = endpoint_operator(sys, a1, grid, x0)
            _, G2 = endpoint_operator(sys, a2, grid, x0)
            dist = np.linalg.norm(a1 - a2)
            if dist > 0:
                ratios.append(np.linalg.norm(G1 - G2) / dist)
        assert np.isfinite(max(ratios))


class TestSimulateTrajectory:
    def test_integrator_unit_control(self):
        sys = UncertainLTI(a_nominal=np.zeros((2, 2)), b_nominal=[1.0, 0.0])
        grid = PWCGrid(1.0, 5)
        x0 = np.array([0.2, 0.9])
        times, states = simulate_trajectory(sys, np.zeros(0), x0, ControlParams(np.ones(5), grid), 3)
        np.testing.assert_allclose(states[-1], x0 + np.array([1.0, 0.0]), atol=1e-12)
        assert times[0] == 0.0 and times[-1] == pytest.approx(1.0)

    def test_hurwitz_free_decay(self):
        sys = UncertainLTI(a_nominal=[[0.0, 1.0], [-2.0, -0.6]], b_nominal=[0.0, 1.0])
        grid = PWCGrid(5.0, 10)
        x0 = np.array([-1.0, -1.0])
        _, states = simulate_trajectory(sys, np.zeros(0), x0, ControlParams(np.zeros(10), grid), 4)
        assert np.linalg.norm(states[-1]) < np.linalg.norm(x0)
        ref = rk4_endpoint(sys, np.zeros(0), x0, ControlParams(np.zeros(10), grid), dt=1e-4)
        np.testing.assert_allclose(states[-1], ref, atol=1e-6)

    def test_endpoint_consistency_random(self):
        sys = smd_system()
        grid = PWCGrid(5.0, 10)
        x0 = np.array([-1.0, -1.0])
        rng = np.random.default_rng(42)
        for _ in range(100):
            alpha = rng.uniform(-0.1, 0.1, 3)
            theta = rng.uniform(-1, 1, 10)
            control = ControlParams(theta, grid)
            _, states = simulate_trajectory(sys, alpha, x0, control, 2)
            m, G = endpoint_operator(sys, alpha, grid, x0)
            np.testing.assert_allclose(states[-1], m + G @ theta, atol=1e-9)


class TestParameterBox:
    def test_membership(self):
        box = ParameterBox([-0.1, -0.1], [0.1, 0.2])
        assert box.contains(ParameterPoint(np.array([0.0, 0.15])))
        assert not box.contains(np.array([0.2, 0.0]))

    def test_vertices_count(self):
        box = ParameterBox([-1.0, 0.0, 2.0], [1.0, 1.0, 3.0])
        v = box.vertices()
        assert v.shape == (8, 3)
        assert {tuple(r) for r in v} == {
            (a, b, c) for a in (-1.0, 1.0) for b in (0.0, 1.0) for c in (2.0, 3.0)
        }

    def test_invalid_bounds_rejected(self):
        with pytest.raises(ValueError):
            ParameterBox([1.0], [0.0])
