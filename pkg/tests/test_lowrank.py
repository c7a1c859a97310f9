import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rpcareg.lowrank import (
    economic_svd,
    nuclear_ball_projection,
    nuclear_norm,
    power_iteration,
    project_l1_ball,
)

from oracles import l1_ball_projection_bisect

rng = np.random.default_rng(3)


class TestNuclearNorm:
    def test_zero_matrix(self):
        assert nuclear_norm(np.zeros((5, 3))) == 0.0

    def test_rank_one_first_column_structure(self):
        # a placed in the first column only: norm equals |a|_2
        for _ in range(10):
            p, q = rng.integers(2, 30), rng.integers(2, 8)
            a = rng.standard_normal(p)
            A1 = np.zeros((p, q))
            A1[:, 0] = a
            np.testing.assert_allclose(nuclear_norm(A1), np.linalg.norm(a), rtol=1e-10)

    def test_rank_one_repeated_column_structure(self):
        for _ in range(10):
            p, q = rng.integers(2, 30), rng.integers(2, 8)
            a = rng.standard_normal(p)
            A2 = np.outer(a, np.ones(q))
            np.testing.assert_allclose(
                nuclear_norm(A2), np.sqrt(q) * np.linalg.norm(a), rtol=1e-10
            )

    def test_centered_variants(self):
        for _ in range(10):
            p, q = rng.integers(2, 30), rng.integers(2, 8)
            a = rng.standard_normal(p)
            A1 = np.zeros((p, q))
            A1[:, 0] = a
            A2 = np.outer(a, np.ones(q))
            c1 = A1 - A1.mean(axis=1, keepdims=True)
            c2 = A2 - A2.mean(axis=1, keepdims=True)
            assert nuclear_norm(c2) < 1e-10 * max(np.linalg.norm(a), 1.0)
            np.testing.assert_allclose(
                nuclear_norm(c1), np.sqrt(1.0 - 1.0 / q) * np.linalg.norm(a), rtol=1e-10
            )

    def test_row_permutation_invariance(self):
        for _ in range(10):
            A = rng.standard_normal((12, 5))
            P = rng.permutation(12)
            sa = np.linalg.svd(A, compute_uv=False)
            sp = np.linalg.svd(A[P], compute_uv=False)
            np.testing.assert_allclose(sa, sp, atol=1e-10)

    def test_four_fold_stack_doubles_nuclear_norm(self):
        for _ in range(10):
            M = rng.standard_normal((9, 4))
            stacked = np.vstack([M, M, M, M])
            np.testing.assert_allclose(nuclear_norm(stacked), 2.0 * nuclear_norm(M), rtol=1e-10)


class TestEconomicSvd:
    def test_orthonormal_factors(self):
        A = rng.standard_normal((20, 6))
        u, s, vt = economic_svd(A)
        np.testing.assert_allclose(u.T @ u, np.eye(6), atol=1e-10)
        np.testing.assert_allclose(vt @ vt.T, np.eye(6), atol=1e-10)
        assert np.all(np.diff(s) <= 1e-12) and np.all(s >= 0.0)
        np.testing.assert_allclose((u * s) @ vt, A, atol=1e-10)


class TestL1Projection:
    def test_inside_ball_unchanged(self):
        v = np.array([0.2, -0.3, 0.1])
        np.testing.assert_allclose(project_l1_ball(v, 1.0), v)

    def test_axis_point(self):
        np.testing.assert_allclose(project_l1_ball(np.array([3.0, 0.0]), 1.0), [1.0, 0.0])

    def test_kkt_case(self):
        np.testing.assert_allclose(project_l1_ball(np.array([2.0, 1.0]), 1.0), [1.0, 0.0])

    def test_zero_radius(self):
        np.testing.assert_allclose(project_l1_ball(np.array([2.0, -1.0]), 0.0), [0.0, 0.0])

    def test_negative_radius_rejected(self):
        with pytest.raises(ValueError):
            project_l1_ball(np.array([1.0]), -0.5)

    @given(st.integers(0, 2**32 - 1), st.floats(0.01, 5.0))
    @settings(max_examples=50, deadline=None)
    def test_matches_bisection_oracle(self, seed, radius):
        v = np.random.default_rng(seed).standard_normal(7) * 3.0
        np.testing.assert_allclose(
            project_l1_ball(v, radius), l1_ball_projection_bisect(v, radius), atol=1e-9
        )

    def test_feasibility_and_monte_carlo_optimality(self):
        local = np.random.default_rng(11)
        for _ in range(5):
            d = int(local.integers(2, 6))
            v = local.standard_normal(d) * 2.0
            radius = float(local.uniform(0.1, 2.0))
            out = project_l1_ball(v, radius)
            assert np.abs(out).sum() <= radius + 1e-10
            d_out = np.linalg.norm(out - v)
            # random feasible candidates must not be closer
            cand = local.standard_normal((10**5, d))
            cand *= (radius * local.uniform(0, 1, size=(10**5, 1))) / np.maximum(
                np.abs(cand).sum(axis=1, keepdims=True), 1e-30
            )
            assert np.all(np.linalg.norm(cand - v, axis=1) >= d_out - 1e-9)


class TestNuclearBallProjection:
    def test_inside_ball_unchanged(self):
        A = rng.standard_normal((6, 3)) * 0.01
        np.testing.assert_allclose(nuclear_ball_projection(A, 100.0), A)

    def test_result_feasible_and_closer(self):
        A = rng.standard_normal((8, 4))
        out = nuclear_ball_projection(A, 1.5)
        assert nuclear_norm(out) <= 1.5 + 1e-9


class TestPowerIteration:
    def test_identity_operator(self):
        est = power_iteration(lambda x: x, lambda y: y, 5)
        np.testing.assert_allclose(est, 1.0, rtol=1e-8)

    def test_diagonal_operator(self):
        D = np.diag([1.0, 2.0, 3.0])
        est = power_iteration(lambda x: D @ x, lambda y: D @ y, 3, tol=1e-10, max_it=2000)
        np.testing.assert_allclose(est, 3.0, rtol=1e-6)

    def test_zero_operator(self):
        assert power_iteration(lambda x: 0.0 * x, lambda y: 0.0 * y, 4) == 0.0

    def test_random_matrix_vs_dense_svd(self):
        A = rng.standard_normal((8, 6))
        est = power_iteration(lambda x: A @ x, lambda y: A.T @ y, 6, tol=1e-12, max_it=5000)
        np.testing.assert_allclose(est, np.linalg.svd(A, compute_uv=False)[0], rtol=1e-6)

    def test_never_exceeds_nuclear_norm(self):
        for _ in range(10):
            A = rng.standard_normal((7, 5))
            est = power_iteration(lambda x: A @ x, lambda y: A.T @ y, 5)
            assert nuclear_norm(A) >= est - 1e-9
