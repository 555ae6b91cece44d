"""Projections onto the feasible subspace, and the consensus fast path.

A linear constraint A^T x = b splits R^p into the span of the constraint
columns R(A) and its orthogonal complement R(A-perp).  After shifting by
a feasible point, every solver in this package works inside R(A-perp);
this script shows the two projectors, the feasible shift for b != 0, and
that the consensus constraint (all blocks equal) is projected by plain
block averaging without ever forming its constraint matrix.
"""

import numpy as np

from delayproj import (
    build_subspace,
    consensus_project,
    consensus_subspace,
    feasibility_residual,
    project_null,
    project_range,
)

rng = np.random.default_rng(0)

# an 8-dimensional problem with 3 random constraints and a nonzero rhs
a_matrix = rng.standard_normal((8, 3))
b = rng.standard_normal(3)
sub = build_subspace(a_matrix, b)
print(f"rank(A) = {sub.rank}, feasible shift norm = "
      f"{np.linalg.norm(sub.feasible_shift):.4f}")

x = rng.standard_normal(8)
u = project_range(sub, x)
v = project_null(sub, x)
print(f"||x - (u + v)||      = {np.linalg.norm(x - u - v):.2e}   (decomposition)")
print(f"<u, v>               = {u @ v:.2e}   (orthogonality)")
print(f"||P(P(x)) - P(x)||   = {np.linalg.norm(project_null(sub, v) - v):.2e}"
      "   (idempotency)")

# mapping an arbitrary point to the feasible set: shift, project, shift back
feasible = project_null(sub, x - sub.feasible_shift) + sub.feasible_shift
print(f"residual ||A^T x - b|| before: {feasibility_residual(sub, x):.3f}, "
      f"after: {feasibility_residual(sub, feasible):.2e}")

# the consensus constraint x^(1) = ... = x^(n): projection = block average
n, d = 4, 3
xs = rng.standard_normal(n * d)
avg = consensus_project(xs, n, d)
print(f"\nconsensus projection of {n} blocks of size {d}:")
print("block means before:", np.round(xs.reshape(n, d).mean(axis=1), 3))
print("block means after: ", np.round(avg.reshape(n, d).mean(axis=1), 3))

sub_c = consensus_subspace(n, d)
print(f"consensus subspace materializes no matrix: a_matrix = {sub_c.a_matrix}")
print(f"consensus residual after projection: {feasibility_residual(sub_c, avg):.2e}")
