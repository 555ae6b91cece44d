"""Orthogonal projections onto R(A) and R(A^perp) for the constraint A^T x = b.

A feasible point satisfies A^T x = b.  After shifting by a feasible
solution y* of the linear system, the feasible set is the null space of
A^T, i.e. R(A^perp).  Both projectors are built once from an orthonormal
basis of R(A); the consensus constraint (all of n blocks equal) gets a
fast path that never materializes the constraint matrix, since its
null-space projector is plain block averaging.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateConstraint, DimensionMismatch, InfeasibleConstraint

RANK_RTOL = 1e-10  # singular values below RANK_RTOL * sigma_max are treated as zero
FEAS_RTOL = 1e-8  # acceptable residual of the feasible shift, relative to 1 + ||b||


@dataclass(frozen=True)
class ConstraintSubspace:
    """Factorized linear constraint A^T x = b.

    Immutable after construction; safe to share across threads.

    Attributes
    ----------
    a_matrix : (p, m) ndarray or None
        The raw constraint matrix.  None for the consensus kind, which is
        never materialized.
    rank : int
        Numerical rank of A.
    ortho_basis : (p, rank) ndarray or None
        Orthonormal columns spanning R(A).  None for the consensus kind.
    feasible_shift : (p,) ndarray
        Least-norm solution of A^T y = b (zero when b = 0).
    kind : str
        "explicit" or "consensus".
    n_blocks, block_dim : int
        Consensus layout (x is n_blocks stacked blocks of block_dim); 0
        for the explicit kind.
    """

    dim: int
    rank: int
    kind: str
    feasible_shift: np.ndarray
    a_matrix: np.ndarray | None = None
    b_vector: np.ndarray | None = None
    ortho_basis: np.ndarray | None = field(default=None, repr=False)
    n_blocks: int = 0
    block_dim: int = 0

    def _check_dim(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise DimensionMismatch(
                f"expected vector of length {self.dim}, got shape {x.shape}"
            )
        return x


def build_subspace(a_matrix, b=None):
    """Factorize the constraint A^T x = b into a ConstraintSubspace.

    Parameters
    ----------
    a_matrix : (p, m) array_like
        Constraint matrix A; the feasible set is {x : A^T x = b}.
    b : (m,) array_like, optional
        Right-hand side; defaults to zero.

    Returns
    -------
    ConstraintSubspace
        With ``rank`` the numerical rank of A (singular values above
        ``RANK_RTOL * sigma_max``) and ``feasible_shift`` the least-norm
        solution of A^T y = b.

    Raises
    ------
    InfeasibleConstraint
        If A^T y = b has no solution.
    DegenerateConstraint
        If rank(A) = p, in which case the feasible set is the single
        point attached to the exception as ``feasible_point``.
    """
    a_matrix = np.atleast_2d(np.asarray(a_matrix, dtype=float))
    p, m = a_matrix.shape
    if p < 1 or m < 1:
        raise DimensionMismatch("constraint matrix must be at least 1x1")
    b = np.zeros(m) if b is None else np.asarray(b, dtype=float)
    if b.shape != (m,):
        raise DimensionMismatch(f"b must have length {m}, got shape {b.shape}")

    u, sing, vt = np.linalg.svd(a_matrix, full_matrices=False)
    if sing.size and sing[0] > 0:
        rank = int(np.sum(sing > RANK_RTOL * sing[0]))
    else:
        rank = 0
    basis = u[:, :rank]

    # Least-norm solution of A^T y = b lives in R(A): y = U_r diag(1/s) V_r^T b.
    if rank > 0:
        shift = basis @ ((vt[:rank] @ b) / sing[:rank])
    else:
        shift = np.zeros(p)
    residual = np.linalg.norm(a_matrix.T @ shift - b)
    if residual > FEAS_RTOL * (1.0 + np.linalg.norm(b)):
        raise InfeasibleConstraint(
            f"A^T y = b is inconsistent (least-squares residual {residual:.3e})"
        )

    if rank == p:
        raise DegenerateConstraint(
            "rank(A) = p: the feasible set is a single point",
            feasible_point=shift,
        )
    return ConstraintSubspace(
        dim=p,
        rank=rank,
        kind="explicit",
        feasible_shift=shift,
        a_matrix=a_matrix,
        b_vector=b,
        ortho_basis=basis,
    )


def consensus_subspace(n, d):
    """Subspace for the consensus constraint x^(1) = ... = x^(n), blocks of size d.

    Equivalent to the explicit chained-difference constraint matrix but
    computed in O(nd) by block averaging; nothing of size nd x d(n-1) is
    ever formed.
    """
    if n < 1 or d < 1:
        raise DimensionMismatch("consensus subspace needs n >= 1, d >= 1")
    return ConstraintSubspace(
        dim=n * d,
        rank=(n - 1) * d,
        kind="consensus",
        feasible_shift=np.zeros(n * d),
        n_blocks=n,
        block_dim=d,
    )


def block_average(x, n, d):
    """Mean of the n stacked d-blocks of x.  Shared by projection and sync."""
    return x.reshape(n, d).mean(axis=0)


def project_range(subspace, x):
    """Project x onto R(A), the span of the constraint columns."""
    x = subspace._check_dim(x)
    if subspace.kind == "consensus":
        return x - consensus_project(x, subspace.n_blocks, subspace.block_dim)
    if subspace.rank == 0:
        return np.zeros_like(x)
    q = subspace.ortho_basis
    return q @ (q.T @ x)


def project_null(subspace, x):
    """Project x onto R(A^perp), the null space of A^T (the feasible directions)."""
    x = subspace._check_dim(x)
    if subspace.kind == "consensus":
        return consensus_project(x, subspace.n_blocks, subspace.block_dim)
    return x - project_range(subspace, x)


def consensus_project(x, n, d):
    """Average the n blocks of x and broadcast the mean back to every block.

    This is exactly the null-space projector of the consensus constraint.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (n * d,):
        raise DimensionMismatch(f"expected vector of length {n * d}, got {x.shape}")
    mean = block_average(x, n, d)
    return np.tile(mean, n)


def feasibility_residual(subspace, x):
    """Constraint violation ||A^T x - b||_2 of a point in original coordinates.

    For the consensus kind the same metric is evaluated without
    materializing A: the chained block differences x^(k) - x^(k+1) are
    exactly A^T x for the difference-matrix constraint.
    """
    x = subspace._check_dim(x)
    if subspace.kind == "consensus":
        blocks = x.reshape(subspace.n_blocks, subspace.block_dim)
        if subspace.n_blocks == 1:
            return 0.0
        return float(np.linalg.norm(blocks[:-1] - blocks[1:]))
    return float(np.linalg.norm(subspace.a_matrix.T @ x - subspace.b_vector))
