import numpy as np
import pytest

from agboost.simplex_qp import (
    QPNonConvergence,
    SimplexQP,
    SolverConfig,
    objective,
    project_simplex,
    solve,
)


def brute_force_simplex_min(qp: SimplexQP, step: float = 1e-3) -> float:
    """Independent oracle: exhaustive grid over the 2- or 3-simplex."""
    a = np.arange(0.0, 1.0 + step / 2, step)
    if qp.dim == 2:
        W = np.column_stack([a, 1.0 - a])
    elif qp.dim == 3:
        A, B = np.meshgrid(a, a)
        mask = A + B <= 1.0 + 1e-12
        W = np.column_stack([A[mask], B[mask], 1.0 - A[mask] - B[mask]])
    else:
        raise ValueError("oracle supports T in {2, 3}")
    res = qp.r[None, :] - W @ qp.M.T
    return float((res * res).sum(axis=1).min())


def brute_force_projection(v: np.ndarray, step: float = 1e-4) -> np.ndarray:
    """1e-4 grid minimizer of ||v - w||^2 over the 2-simplex."""
    a = np.arange(0.0, 1.0 + step / 2, step)
    W = np.column_stack([a, 1.0 - a])
    d = ((W - v[None, :]) ** 2).sum(axis=1)
    return W[int(np.argmin(d))]


class TestProjectSimplex:
    def test_already_feasible(self):
        np.testing.assert_allclose(project_simplex(np.array([0.5, 0.5])), [0.5, 0.5])

    def test_hand_case_vs_grid_oracle(self):
        v = np.array([1.2, -0.2])
        got = project_simplex(v)
        np.testing.assert_allclose(got, [1.0, 0.0], atol=1e-12)
        oracle = brute_force_projection(v)
        assert np.abs(got - oracle).max() <= 1e-4 + 1e-12

    def test_constant_vector_maps_to_uniform(self):
        for c in (-5.0, 0.0, 3.7):
            got = project_simplex(np.full(7, c))
            np.testing.assert_allclose(got, np.full(7, 1 / 7), atol=1e-12)

    def test_feasibility_property(self):
        rng = np.random.default_rng(42)
        for _ in range(300):
            T = int(rng.integers(1, 30))
            scale = 10.0 ** rng.integers(-3, 6)
            v = rng.normal(size=T) * scale
            if rng.random() < 0.2:
                v = -np.abs(v)  # all-negative inputs
            w = project_simplex(v)
            assert (w >= 0.0).all()
            assert abs(w.sum() - 1.0) < 1e-12 * max(1, T)

    def test_idempotent(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            v = rng.normal(size=int(rng.integers(1, 12))) * 100
            w = project_simplex(v)
            np.testing.assert_allclose(project_simplex(w), w, atol=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            project_simplex(np.array([]))


class TestObjective:
    def test_exact_solution_zero(self):
        qp = SimplexQP(np.eye(2), np.array([0.3, 0.7]))
        assert objective(qp, np.array([0.3, 0.7])) < 1e-30

    def test_zero_matrix(self):
        qp = SimplexQP(np.zeros((3, 2)), np.array([1.0, 2.0, 2.0]))
        assert objective(qp, np.array([0.5, 0.5])) == 9.0

    def test_hand_case(self):
        qp = SimplexQP(np.eye(2), np.array([0.3, 0.7]))
        assert abs(objective(qp, np.array([0.5, 0.5])) - 0.08) < 1e-15

    def test_rejects_infeasible_w(self):
        qp = SimplexQP(np.eye(2), np.array([0.3, 0.7]))
        with pytest.raises(ValueError, match="simplex"):
            objective(qp, np.array([0.8, 0.8]))
        with pytest.raises(ValueError, match="simplex"):
            objective(qp, np.array([1.5, -0.5]))


class TestSolve:
    def test_single_column(self):
        qp = SimplexQP(np.ones((3, 1)), np.array([1.0, 2.0, 3.0]))
        np.testing.assert_allclose(solve(qp), [1.0])

    def test_interior_optimum(self):
        qp = SimplexQP(np.eye(2), np.array([0.3, 0.7]))
        np.testing.assert_allclose(solve(qp), [0.3, 0.7], atol=1e-8)

    def test_vertex_optimum_vs_grid(self):
        qp = SimplexQP(np.eye(2), np.array([1.2, -0.2]))
        w = solve(qp)
        np.testing.assert_allclose(w, [1.0, 0.0], atol=1e-8)
        assert objective(qp, w) <= brute_force_simplex_min(qp) + 1e-6

    def test_random_oracle_equivalence(self):
        rng = np.random.default_rng(7)
        for _ in range(40):
            T = int(rng.integers(2, 4))
            n = int(rng.integers(1, 21))
            M = rng.normal(size=(n, T)) * 10.0 ** rng.integers(-2, 3)
            r = rng.normal(size=n) * 10.0 ** rng.integers(-2, 3)
            qp = SimplexQP(M, r)
            w = solve(qp)
            assert (w >= -1e-12).all() and abs(w.sum() - 1.0) < 1e-9
            assert objective(qp, np.maximum(w, 0)) <= brute_force_simplex_min(qp) + 1e-6

    def test_kkt_stationarity(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            T = int(rng.integers(2, 40))
            n = int(rng.integers(2, 30))
            qp = SimplexQP(rng.normal(size=(n, T)), rng.normal(size=n))
            w = solve(qp)
            g = 2.0 * (qp.M.T @ (qp.M @ w) - qp.M.T @ qp.r)
            active = w > 1e-6
            assert (g[active] - g.min() <= 1e-5).all()

    def test_never_worse_than_uniform(self):
        rng = np.random.default_rng(13)
        for _ in range(50):
            T = int(rng.integers(2, 60))
            n = int(rng.integers(2, 40))
            scale = 10.0 ** rng.integers(-2, 5)
            qp = SimplexQP(rng.normal(size=(n, T)) * scale, rng.normal(size=n) * scale)
            w = solve(qp)
            f_w = objective(qp, np.maximum(w, 0))
            f_u = objective(qp, np.full(T, 1.0 / T))
            assert f_w <= f_u + 1e-9 * (1.0 + f_u)

    def test_duplicate_columns_deterministic(self):
        # rank-deficient M: any minimizer is acceptable, but repeated solves
        # must agree and match the grid oracle's objective
        col = np.array([1.0, 2.0, 0.5])
        M = np.column_stack([col, col, -col])
        qp = SimplexQP(M, np.array([0.8, 1.6, 0.4]))
        w1 = solve(qp)
        w2 = solve(qp)
        np.testing.assert_array_equal(w1, w2)
        assert objective(qp, np.maximum(w1, 0)) <= brute_force_simplex_min(qp) + 1e-6

    def test_zero_matrix_returns_uniform(self):
        qp = SimplexQP(np.zeros((4, 3)), np.ones(4))
        np.testing.assert_allclose(solve(qp), np.full(3, 1 / 3))

    def test_non_convergence_error_carries_state(self):
        qp = SimplexQP(np.eye(3), np.array([0.5, 0.5, 0.0]))
        with pytest.raises(QPNonConvergence) as err:
            solve(qp, SolverConfig(tol=1e-14, max_iter=1))
        assert err.value.w_best.shape == (3,)
        assert err.value.gap >= 0.0

    def test_validation(self):
        with pytest.raises(ValueError):
            SimplexQP(np.ones((2, 2)), np.ones(3))
        with pytest.raises(ValueError):
            SimplexQP(np.array([[np.inf, 1.0]]), np.ones(1))
        with pytest.raises(ValueError):
            SolverConfig(tol=0.0)
        with pytest.raises(ValueError):
            SolverConfig(max_iter=0)
