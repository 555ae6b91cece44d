"""Projection module tests against a pseudoinverse oracle."""

import numpy as np
import pytest

from delayproj import (
    DegenerateConstraint,
    DimensionMismatch,
    InfeasibleConstraint,
    build_subspace,
    consensus_project,
    consensus_subspace,
    feasibility_residual,
    project_null,
    project_range,
)


def oracle_range_projector(a_matrix):
    """P_A = A (A^T A)^+ A^T, computed via the pseudoinverse."""
    return a_matrix @ np.linalg.pinv(a_matrix)


def chained_difference_matrix(n, d):
    """Explicit consensus constraint matrix: A^T x stacks x^(k) - x^(k+1)."""
    bmat = np.zeros((n - 1, n))
    for k in range(n - 1):
        bmat[k, k] = 1.0
        bmat[k, k + 1] = -1.0
    return np.kron(bmat, np.eye(d)).T  # (n*d, (n-1)*d)


def test_axis_aligned_subspace():
    s = build_subspace(np.array([[1.0], [0.0]]), np.array([0.0]))
    assert s.rank == 1
    proj = s.ortho_basis @ s.ortho_basis.T
    assert np.allclose(proj, [[1.0, 0.0], [0.0, 0.0]], atol=1e-14)
    assert np.allclose(s.feasible_shift, [0.0, 0.0])


def test_feasible_shift_least_norm():
    s = build_subspace(np.array([[2.0], [0.0]]), np.array([4.0]))
    assert np.allclose(s.feasible_shift, [2.0, 0.0], atol=1e-12)
    proj = s.ortho_basis @ s.ortho_basis.T
    assert np.allclose(proj, [[1.0, 0.0], [0.0, 0.0]], atol=1e-14)


def test_range_projector_matches_pseudoinverse_oracle():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((7, 3))
    s = build_subspace(a)
    oracle = oracle_range_projector(a)
    assert np.max(np.abs(s.ortho_basis @ s.ortho_basis.T - oracle)) < 1e-9
    for _ in range(5):
        x = rng.standard_normal(7)
        assert np.linalg.norm(project_range(s, x) - oracle @ x) < 1e-9


def test_project_range_examples():
    s = build_subspace(np.array([[1.0], [0.0]]))
    assert np.allclose(project_range(s, np.array([3.0, 4.0])), [3.0, 0.0])
    assert np.allclose(project_range(s, np.zeros(2)), np.zeros(2))


def test_project_null_examples():
    s = build_subspace(np.array([[1.0], [0.0]]))
    assert np.allclose(project_null(s, np.array([3.0, 4.0])), [0.0, 4.0])
    x_null = np.array([0.0, 2.5])
    assert np.linalg.norm(project_null(s, x_null) - x_null) < 1e-12


def test_orthogonal_decomposition_is_subtraction():
    rng = np.random.default_rng(1)
    a = rng.standard_normal((9, 4))
    s = build_subspace(a)
    x = rng.standard_normal(9)
    recon = project_range(s, x) + project_null(s, x)
    assert np.linalg.norm(recon - x) <= 1e-14 * (1 + np.linalg.norm(x))


@pytest.mark.parametrize("seed", range(8))
def test_projector_algebra(seed):
    rng = np.random.default_rng(seed)
    p = int(rng.integers(3, 40))
    m = int(rng.integers(1, min(p, 12)))
    a = rng.standard_normal((p, m))
    s = build_subspace(a)
    for _ in range(100):
        x = rng.standard_normal(p)
        y = rng.standard_normal(p)
        alpha, beta = rng.standard_normal(2)
        lin = project_range(s, alpha * x + beta * y)
        lin_ref = alpha * project_range(s, x) + beta * project_range(s, y)
        tol = 1e-10 * (abs(alpha) * np.linalg.norm(x) + abs(beta) * np.linalg.norm(y))
        assert np.linalg.norm(lin - lin_ref) <= tol + 1e-14
        # non-expansiveness
        dxy = np.linalg.norm(x - y)
        assert np.linalg.norm(project_range(s, x) - project_range(s, y)) <= dxy + 1e-12
        assert np.linalg.norm(project_null(s, x) - project_null(s, y)) <= dxy + 1e-12
        # orthogonality and idempotency
        u = project_range(s, x)
        v = project_null(s, x)
        assert abs(u @ v) <= 1e-10 * (np.linalg.norm(x) ** 2 + 1e-12)
        assert np.linalg.norm(project_range(s, u) - u) <= 1e-12 * (1 + np.linalg.norm(u))
        assert np.linalg.norm(project_null(s, v) - v) <= 1e-12 * (1 + np.linalg.norm(v))


@pytest.mark.parametrize("n", [2, 3, 4, 5])
@pytest.mark.parametrize("d", [1, 2, 3])
def test_consensus_matches_explicit_constraint(n, d):
    rng = np.random.default_rng(n * 10 + d)
    s_explicit = build_subspace(chained_difference_matrix(n, d))
    x = rng.standard_normal(n * d)
    assert np.max(np.abs(consensus_project(x, n, d) - project_null(s_explicit, x))) < 1e-12


def test_consensus_examples():
    assert np.allclose(consensus_project(np.array([1.0, 3.0]), 2, 1), [2.0, 2.0])
    x = np.tile(np.array([1.5, -2.0]), 3)
    assert np.allclose(consensus_project(x, 3, 2), x)


def test_consensus_subspace_projects_without_matrix():
    s = consensus_subspace(4, 3)
    assert s.a_matrix is None and s.ortho_basis is None
    rng = np.random.default_rng(3)
    x = rng.standard_normal(12)
    assert np.allclose(project_null(s, x), consensus_project(x, 4, 3))
    assert np.allclose(project_range(s, x), x - consensus_project(x, 4, 3))


def test_feasibility_residual():
    rng = np.random.default_rng(5)
    a = rng.standard_normal((8, 3))
    b = rng.standard_normal(3)
    s = build_subspace(a, b)
    assert feasibility_residual(s, s.feasible_shift) <= 1e-10 * (1 + np.linalg.norm(b))
    x = rng.standard_normal(8)
    fixed = project_null(s, x - s.feasible_shift) + s.feasible_shift
    assert feasibility_residual(s, fixed) <= 1e-9


def test_consensus_residual_matches_explicit_metric():
    rng = np.random.default_rng(6)
    n, d = 4, 3
    s_fast = consensus_subspace(n, d)
    s_explicit = build_subspace(chained_difference_matrix(n, d))
    x = rng.standard_normal(n * d)
    assert abs(feasibility_residual(s_fast, x) - feasibility_residual(s_explicit, x)) < 1e-10


def test_dimension_mismatch():
    s = build_subspace(np.array([[1.0], [0.0]]))
    with pytest.raises(DimensionMismatch):
        project_range(s, np.zeros(3))
    with pytest.raises(DimensionMismatch):
        project_null(s, np.zeros(1))
    with pytest.raises(DimensionMismatch):
        feasibility_residual(s, np.zeros(5))


def test_infeasible_constraint():
    a = np.array([[1.0, 2.0], [0.0, 0.0]])  # A^T y = (y1, 2 y1)
    with pytest.raises(InfeasibleConstraint):
        build_subspace(a, np.array([1.0, 1.0]))


def test_degenerate_constraint_reports_point():
    a = np.eye(2)
    with pytest.raises(DegenerateConstraint) as err:
        build_subspace(a, np.array([3.0, -1.0]))
    assert np.allclose(err.value.feasible_point, [3.0, -1.0], atol=1e-10)


def test_rank_cutoff_drops_tiny_directions():
    a = np.array([[1.0, 1.0 + 1e-14], [0.0, 0.0]])
    s = build_subspace(a)
    assert s.rank == 1


def test_zero_matrix_with_zero_rhs():
    s = build_subspace(np.zeros((3, 2)), np.zeros(2))
    assert s.rank == 0
    x = np.array([1.0, -2.0, 0.5])
    assert np.allclose(project_null(s, x), x)
    assert np.allclose(project_range(s, x), 0.0)


def test_ortho_basis_has_orthonormal_columns():
    rng = np.random.default_rng(7)
    for _ in range(10):
        p = int(rng.integers(2, 30))
        m = int(rng.integers(1, min(p, 8)))
        s = build_subspace(rng.standard_normal((p, m)))
        gram = s.ortho_basis.T @ s.ortho_basis
        assert np.max(np.abs(gram - np.eye(s.rank))) < 1e-10
