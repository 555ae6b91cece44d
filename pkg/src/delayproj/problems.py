"""Linearly constrained convex test problems and their oracles.

Each generator returns an :class:`LcpProblem` exposing a value oracle, a
full-gradient oracle, and per-atom stochastic gradient oracles for the
finite sum F(x) = (1/N) sum_i F(x; xi_i), together with smoothness and
strong-convexity constants and the attached constraint subspace.

Conventions
-----------
* ``smoothness_L`` is the smoothness constant of the full objective F
  (what the step-size rules consume and what defines the reported
  condition number kappa = L / mu).
* ``atom_smoothness_L`` is a uniform Lipschitz constant for the per-atom
  gradients, i.e. the per-sample smoothness assumption.  It is never
  smaller than ``smoothness_L``.
* Generators are seed-deterministic: the same seed reproduces the
  problem data bit for bit.
"""

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadSpectrum,
    DimensionMismatch,
    DisconnectedGraph,
    InfeasiblePoint,
    InfeasibleRates,
    MismatchedDims,
    NoConvergence,
)
from .projection import (
    ConstraintSubspace,
    build_subspace,
    consensus_subspace,
    feasibility_residual,
    project_null,
    project_range,
)


# ---------------------------------------------------------------------------
# samplers
# ---------------------------------------------------------------------------

def _partition_stream(seed, partition_id):
    """Worker RNG stream keyed by data partition, not worker position."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(partition_id,)))


class PlainSampler:
    """Uniform-with-replacement atom sampler for a single finite sum."""

    def __init__(self, seed, n_atoms):
        self.n_atoms = n_atoms
        self._rng = _partition_stream(seed, 0)

    def draw(self, batch):
        return self._rng.integers(0, self.n_atoms, size=batch)


class TupleSampler:
    """One independent uniform atom draw per worker, per iteration.

    Column k of the returned (batch, n) index array comes from a stream
    keyed by worker k's partition id, so the draws are reproducible under
    worker permutation and identical between a federated run and the
    delayed-projection run on the lifted problem.
    """

    def __init__(self, seed, partition_ids, atom_counts):
        self.atom_counts = list(atom_counts)
        self._streams = [_partition_stream(seed, pid) for pid in partition_ids]

    def draw(self, batch):
        cols = [
            stream.integers(0, count, size=batch)
            for stream, count in zip(self._streams, self.atom_counts)
        ]
        return np.stack(cols, axis=1)


# ---------------------------------------------------------------------------
# problem container
# ---------------------------------------------------------------------------

@dataclass
class LcpProblem:
    """A linearly constrained finite-sum problem with its oracles.

    Oracles are pure functions of their arguments; instances are
    immutable in practice and safe to share across solver runs.  RNG
    state lives in the solver, never here.
    """

    dim: int
    n_atoms: int
    subspace: ConstraintSubspace
    value_oracle: callable            # x -> float
    full_gradient_oracle: callable    # x -> (p,) ndarray
    atom_gradient_oracle: callable    # (x, i) -> (p,) ndarray
    batch_gradient_oracle: callable   # (x, index array) -> mean gradient
    smoothness_L: float
    strong_convexity_mu: float
    atom_smoothness_L: float
    kind: str
    quadratic: tuple | None = None    # (C, g) with F(x) = x^T C x + g^T x
    lifted: "object | None" = None    # LiftedStructure for consensus problems
    meta: dict = field(default_factory=dict)

    def make_sampler(self, seed):
        if self.lifted is not None:
            fed = self.lifted
            return TupleSampler(
                seed, fed.partition_ids, [lp.n_atoms for lp in fed.local_problems]
            )
        return PlainSampler(seed, self.n_atoms)


# ---------------------------------------------------------------------------
# linearly constrained quadratic programming (LCQP)
# ---------------------------------------------------------------------------

def lcqp_from_atoms(atoms, ridge, g, a_matrix, b=None):
    """Assemble the LCQP F(x) = x^T C x + g^T x, C = (1/N) sum c_i c_i^T + ridge*I.

    ``atoms`` holds the c_i as rows.  Atom i's gradient is
    2 c_i (c_i^T x) + 2*ridge*x + g, so averaging over atoms gives the
    exact full gradient.
    """
    atoms = np.asarray(atoms, dtype=float)
    n_atoms, p = atoms.shape
    g = np.asarray(g, dtype=float)
    cmat = atoms.T @ atoms / n_atoms + ridge * np.eye(p)
    subspace = build_subspace(a_matrix, b)

    eigvals = np.linalg.eigvalsh(cmat)

    def value(x):
        return float(x @ cmat @ x + g @ x)

    def full_grad(x):
        return 2.0 * (cmat @ x) + g

    def atom_grad(x, i):
        c = atoms[i]
        return 2.0 * c * (c @ x) + 2.0 * ridge * x + g

    def batch_grad(x, idx):
        rows = atoms[idx]
        quad = 2.0 * rows.T @ (rows @ x) / len(idx)
        return quad + 2.0 * ridge * x + g

    return LcpProblem(
        dim=p,
        n_atoms=n_atoms,
        subspace=subspace,
        value_oracle=value,
        full_gradient_oracle=full_grad,
        atom_gradient_oracle=atom_grad,
        batch_gradient_oracle=batch_grad,
        smoothness_L=2.0 * float(eigvals[-1]),
        strong_convexity_mu=2.0 * float(eigvals[0]),
        atom_smoothness_L=2.0 * float(np.max(np.sum(atoms**2, axis=1))) + 2.0 * ridge,
        kind="lcqp",
        quadratic=(cmat, g),
        meta={"ridge": ridge, "_atoms": atoms},
    )


def make_lcqp(seed, p, n_atoms, m_constraints, eigen_floor, eigen_ceil):
    """Random LCQP with the spectrum of C inside [eigen_floor, eigen_ceil].

    Atoms and the linear term are seeded standard normal draws; the atoms
    are rescaled so lambda_max(C) = eigen_ceil while the ridge eigen_floor
    keeps lambda_min(C) >= eigen_floor.  The constraint matrix A is
    Gaussian p x m_constraints with b = 0.
    """
    if eigen_floor <= 0 or eigen_ceil < eigen_floor:
        raise BadSpectrum(f"need 0 < eigen_floor <= eigen_ceil, got [{eigen_floor}, {eigen_ceil}]")
    if n_atoms < p:
        raise DimensionMismatch("need n_atoms >= p so the atom covariance is well formed")
    if not 1 <= m_constraints < p:
        raise DimensionMismatch("need 1 <= m_constraints < p")
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal((n_atoms, p))
    lam_max0 = float(np.linalg.eigvalsh(raw.T @ raw / n_atoms)[-1])
    scale = (eigen_ceil - eigen_floor) / lam_max0 if eigen_ceil > eigen_floor else 0.0
    atoms = raw * np.sqrt(scale)
    g = rng.standard_normal(p)
    a_matrix = rng.standard_normal((p, m_constraints))
    problem = lcqp_from_atoms(atoms, eigen_floor, g, a_matrix)
    problem.meta.update(
        generator="lcqp", seed=seed, p=p, n_atoms=n_atoms,
        m_constraints=m_constraints, eigen_floor=eigen_floor, eigen_ceil=eigen_ceil,
    )
    return problem


def planted_spectrum_quadratic(seed, p, n_atoms, m_constraints, eigenvalues,
                               minimizer_modes=None, minimizer_coeffs=None,
                               constraint_free_modes=()):
    """Quadratic with an exactly planted Hessian spectrum.

    F(x) = x^T C x + g^T x with C = Q diag(eigenvalues) Q^T for a seeded
    random orthogonal Q.  The linear term is chosen so the unconstrained
    minimizer -C^{-1} g/2 has support only on the eigen-modes listed in
    ``minimizer_modes`` (all modes when None; amplitudes from
    ``minimizer_coeffs`` when given); with x0 = 0 this controls which
    modes carry initial error.  Constraint columns are projected away
    from the eigenvectors in ``constraint_free_modes``, so those modes
    lie inside the feasible subspace and keep their planted minimizer
    amplitude under the constraint.  Atoms are synthesized so the
    atom-average gradient is exact.
    """
    eigenvalues = np.asarray(eigenvalues, dtype=float)
    if eigenvalues.min() <= 0:
        raise BadSpectrum("planted eigenvalues must be positive")
    if n_atoms < p:
        raise DimensionMismatch("need n_atoms >= p to plant the spectrum exactly")
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((p, p)))
    floor = eigenvalues.min()
    # C - floor*I is PSD; synthesize atoms c_i with (1/N) sum c_i c_i^T equal to it
    # by mixing its square root with a column-orthonormal (N, p) frame.
    rest = q @ np.diag(np.sqrt(np.maximum(eigenvalues - floor, 0.0))) @ q.T
    frame, _ = np.linalg.qr(rng.standard_normal((n_atoms, p)))
    atoms = np.sqrt(n_atoms) * frame @ rest
    if minimizer_modes is None:
        target = rng.standard_normal(p)
    else:
        modes = list(minimizer_modes)
        coeff = np.zeros(p)
        coeff[modes] = (rng.standard_normal(len(modes))
                        if minimizer_coeffs is None else np.asarray(minimizer_coeffs))
        target = q @ coeff
    cmat_exact = q @ np.diag(eigenvalues) @ q.T
    g = -2.0 * cmat_exact @ target
    a_matrix = rng.standard_normal((p, m_constraints))
    for mode in constraint_free_modes:
        v = q[:, mode]
        a_matrix -= np.outer(v, v @ a_matrix)
    problem = lcqp_from_atoms(atoms, floor, g, a_matrix)
    problem.meta.update(
        generator="planted_quadratic", seed=seed, p=p, n_atoms=n_atoms,
        m_constraints=m_constraints,
    )
    return problem


# ---------------------------------------------------------------------------
# linear equality constrained logistic regression
# ---------------------------------------------------------------------------

def _log1pexp(z):
    # log(1 + exp(z)) without overflow
    return np.logaddexp(0.0, z)


def logreg_from_data(features, labels, weight_decay, a_matrix, n_classes=2, b=None):
    """Constrained logistic regression from explicit data.

    ``features`` is (N, d); a bias column of ones is appended internally.
    For ``n_classes == 2`` labels are in {-1, +1} and the parameter
    vector has length d + 1; for the multinomial case labels are in
    {0..K-1} and parameters are the stacked K x (d+1) weight matrix.
    """
    x_raw = np.asarray(features, dtype=float)
    labels = np.asarray(labels)
    n_samples, d = x_raw.shape
    xmat = np.hstack([x_raw, np.ones((n_samples, 1))])
    lam_max = float(np.linalg.eigvalsh(xmat.T @ xmat)[-1])
    row_sq = np.sum(xmat**2, axis=1)

    if n_classes == 2:
        y = labels.astype(float)
        p = d + 1

        def value(w):
            z = xmat @ w
            return float(np.mean(_log1pexp(-y * z)) + 0.5 * weight_decay * w @ w)

        def full_grad(w):
            z = xmat @ w
            sig = 1.0 / (1.0 + np.exp(y * z))       # 1 - sigmoid(y z)
            return -(xmat.T @ (y * sig)) / n_samples + weight_decay * w

        def atom_grad(w, i):
            z = xmat[i] @ w
            sig = 1.0 / (1.0 + np.exp(y[i] * z))
            return -xmat[i] * (y[i] * sig) + weight_decay * w

        def batch_grad(w, idx):
            rows = xmat[idx]
            z = rows @ w
            sig = 1.0 / (1.0 + np.exp(y[idx] * z))
            return -(rows.T @ (y[idx] * sig)) / len(idx) + weight_decay * w

        smooth = lam_max / (4.0 * n_samples) + weight_decay
        atom_smooth = float(np.max(row_sq)) / 4.0 + weight_decay
    else:
        k = n_classes
        y_idx = labels.astype(int)
        p = (d + 1) * k
        onehot = np.zeros((n_samples, k))
        onehot[np.arange(n_samples), y_idx] = 1.0

        def _probs(w, rows):
            logits = rows @ w.reshape(k, d + 1).T
            logits -= logits.max(axis=1, keepdims=True)
            ez = np.exp(logits)
            return ez / ez.sum(axis=1, keepdims=True)

        def value(w):
            logits = xmat @ w.reshape(k, d + 1).T
            lse = np.log(np.sum(np.exp(logits - logits.max(axis=1, keepdims=True)),
                                axis=1)) + logits.max(axis=1)
            picked = logits[np.arange(n_samples), y_idx]
            return float(np.mean(lse - picked) + 0.5 * weight_decay * w @ w)

        def full_grad(w):
            resid = _probs(w, xmat) - onehot
            return (resid.T @ xmat).ravel() / n_samples + weight_decay * w

        def atom_grad(w, i):
            resid = _probs(w, xmat[i:i + 1]) - onehot[i:i + 1]
            return (resid.T @ xmat[i:i + 1]).ravel() + weight_decay * w

        def batch_grad(w, idx):
            rows = xmat[idx]
            resid = _probs(w, rows) - onehot[idx]
            return (resid.T @ rows).ravel() / len(idx) + weight_decay * w

        # softmax Hessian is at most (1/2) I_K (x) x x^T per sample
        smooth = lam_max / (2.0 * n_samples) + weight_decay
        atom_smooth = float(np.max(row_sq)) / 2.0 + weight_decay

    subspace = build_subspace(a_matrix, b)
    return LcpProblem(
        dim=p,
        n_atoms=n_samples,
        subspace=subspace,
        value_oracle=value,
        full_gradient_oracle=full_grad,
        atom_gradient_oracle=atom_grad,
        batch_gradient_oracle=batch_grad,
        smoothness_L=smooth,
        strong_convexity_mu=weight_decay,
        atom_smoothness_L=atom_smooth,
        kind="logreg",
        meta={"weight_decay": weight_decay, "n_classes": n_classes,
              "_features": x_raw, "_labels": labels},
    )


def make_constrained_logreg(seed, n_samples, d, n_classes, m_constraints,
                            weight_decay, label_noise=0.1, signal_scale=2.0):
    """Synthetic constrained logistic regression.

    Seeded Gaussian features with labels planted from a random linear
    model (flipped with probability ``label_noise`` so the problem is
    never separable), weight decay supplying mu, and a Gaussian
    constraint matrix whose columns are orthonormalized.
    """
    p = (d + 1) if n_classes == 2 else (d + 1) * n_classes
    if not 1 <= m_constraints < p:
        raise DimensionMismatch("need 1 <= m_constraints < parameter dimension")
    rng = np.random.default_rng(seed)
    x_raw = rng.standard_normal((n_samples, d))
    if n_classes == 2:
        w_true = rng.standard_normal(d) * signal_scale / np.sqrt(d)
        z = x_raw @ w_true
        y = np.where(rng.random(n_samples) < 1.0 / (1.0 + np.exp(-z)), 1.0, -1.0)
        flip = rng.random(n_samples) < label_noise
        y[flip] = -y[flip]
        labels = y
    else:
        w_true = rng.standard_normal((n_classes, d)) * signal_scale / np.sqrt(d)
        logits = x_raw @ w_true.T
        labels = np.argmax(logits + rng.gumbel(size=logits.shape), axis=1)
        flip = rng.random(n_samples) < label_noise
        labels[flip] = rng.integers(0, n_classes, size=int(flip.sum()))
    a_gauss = rng.standard_normal((p, m_constraints))
    a_matrix, _ = np.linalg.qr(a_gauss)
    problem = logreg_from_data(x_raw, labels, weight_decay, a_matrix, n_classes)
    problem.meta.update(
        generator="logreg", seed=seed, n_samples=n_samples, d=d,
        n_classes=n_classes, m_constraints=m_constraints,
        label_noise=label_noise, signal_scale=signal_scale,
    )
    return problem


# ---------------------------------------------------------------------------
# network flow
# ---------------------------------------------------------------------------

def make_network_flow(edges, node_rates, edge_cost_weights=None):
    """Min-cost flow with quadratic edge costs F(x) = sum_l (w_l/2) x_l^2.

    ``edges`` lists directed edges (i, j); the constraint A^T x = b uses
    the e x n edge-node incidence matrix (+1 where an edge leaves a node,
    -1 where it enters).  There is one atom per edge term; atom l's
    gradient is N * w_l * x_l * e_l so the atom average is exact.

    Raises InfeasibleRates when the rates do not sum to zero,
    DisconnectedGraph when the graph is not connected, and propagates
    DegenerateConstraint for trees (the flow is then forced uniquely).
    """
    edges = [tuple(e) for e in edges]
    node_rates = np.asarray(node_rates, dtype=float)
    n_nodes = len(node_rates)
    n_edges = len(edges)
    if abs(node_rates.sum()) > 1e-12:
        raise InfeasibleRates(f"rates must sum to 0, got {node_rates.sum():.3e}")
    weights = (np.ones(n_edges) if edge_cost_weights is None
               else np.asarray(edge_cost_weights, dtype=float))
    if weights.shape != (n_edges,) or np.any(weights <= 0):
        raise DimensionMismatch("need one positive cost weight per edge")

    # connectivity (undirected sense)
    adj = [[] for _ in range(n_nodes)]
    for i, j in edges:
        adj[i].append(j)
        adj[j].append(i)
    seen, stack = {0}, [0]
    while stack:
        for nb in adj[stack.pop()]:
            if nb not in seen:
                seen.add(nb)
                stack.append(nb)
    if len(seen) != n_nodes:
        raise DisconnectedGraph(f"{n_nodes - len(seen)} nodes unreachable")

    incidence = np.zeros((n_edges, n_nodes))
    for l, (i, j) in enumerate(edges):
        incidence[l, i] = 1.0
        incidence[l, j] = -1.0
    subspace = build_subspace(incidence, node_rates)

    def value(x):
        return float(0.5 * np.sum(weights * x * x))

    def full_grad(x):
        return weights * x

    def atom_grad(x, i):
        out = np.zeros(n_edges)
        out[i] = n_edges * weights[i] * x[i]
        return out

    def batch_grad(x, idx):
        out = np.zeros(n_edges)
        np.add.at(out, idx, n_edges * weights[idx] * x[idx] / len(idx))
        return out

    return LcpProblem(
        dim=n_edges,
        n_atoms=n_edges,
        subspace=subspace,
        value_oracle=value,
        full_gradient_oracle=full_grad,
        atom_gradient_oracle=atom_grad,
        batch_gradient_oracle=batch_grad,
        smoothness_L=float(weights.max()),
        strong_convexity_mu=float(weights.min()),
        atom_smoothness_L=float(n_edges * weights.max()),
        kind="network_flow",
        quadratic=(np.diag(weights) / 2.0, np.zeros(n_edges)),
        meta={"generator": "network_flow", "edges": edges,
              "node_rates": node_rates.tolist(), "weights": weights.tolist()},
    )


# ---------------------------------------------------------------------------
# federated instances and the consensus lifting
# ---------------------------------------------------------------------------

@dataclass
class LocalProblem:
    """One worker's finite-sum objective f_k(x) = (1/N_k) sum_i f(x; xi_i)."""

    dim: int
    n_atoms: int
    value_oracle: callable
    full_gradient_oracle: callable
    atom_gradient_oracle: callable
    batch_gradient_oracle: callable
    smoothness_L: float
    strong_convexity_mu: float
    atom_smoothness_L: float
    quadratic: tuple | None = None    # (H, gbar) with grad f_k = H x - gbar


@dataclass
class FederatedInstance:
    """n local finite-sum objectives over disjoint atom subsets."""

    n_workers: int
    local_dim: int
    local_problems: list
    partition_ids: list
    sigma_star_sq: float = 0.0
    zeta_star_sq: float = 0.0
    x_star: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def average_value(self, x):
        return sum(lp.value_oracle(x) for lp in self.local_problems) / self.n_workers

    def average_gradient(self, x):
        acc = np.zeros(self.local_dim)
        for lp in self.local_problems:
            acc += lp.full_gradient_oracle(x)
        return acc / self.n_workers


def _solve_average_minimizer(local_problems, d, tol=1e-12, max_iter=500_000):
    """Minimizer of (1/n) sum f_k, closed form for quadratic locals else GD."""
    if all(lp.quadratic is not None for lp in local_problems):
        h_sum = sum(lp.quadratic[0] for lp in local_problems)
        g_sum = sum(lp.quadratic[1] for lp in local_problems)
        return np.linalg.solve(h_sum, g_sum)
    lbig = max(lp.smoothness_L for lp in local_problems)
    x = np.zeros(d)
    for _ in range(max_iter):
        grad = np.zeros(d)
        for lp in local_problems:
            grad += lp.full_gradient_oracle(x)
        grad /= len(local_problems)
        if np.linalg.norm(grad) <= tol:
            return x
        x = x - grad / lbig
    raise NoConvergence("average-minimizer descent did not reach tolerance")


def federated_heterogeneity(fed, x_star_local):
    """Exact local variance and heterogeneity at the shared optimum.

    Returns (sigma_star_sq, zeta_star_sq): the average per-worker
    stochastic-gradient variance at x*, and the average squared norm of
    the local full gradients at x*.
    """
    x = np.asarray(x_star_local, dtype=float)
    sig, zet = 0.0, 0.0
    for lp in fed.local_problems:
        gfull = lp.full_gradient_oracle(x)
        zet += float(gfull @ gfull)
        acc = 0.0
        for i in range(lp.n_atoms):
            diff = lp.atom_gradient_oracle(x, i) - gfull
            acc += float(diff @ diff)
        sig += acc / lp.n_atoms
    n = fed.n_workers
    return sig / n, zet / n


def make_federated_quadratics(seed, n_workers, d, atoms_per_worker,
                              hetero_shift=1.0, noise_scale=1.0,
                              curvature_spread=0.5, curvature_noise=0.3,
                              identical=False):
    """Federated instance of local quadratics f_k(x) = (1/2) x^T H_k x - gbar_k^T x.

    Atom (k, i) is (1/2)(1 + c_{k,i}) x^T H_k x - g_{k,i}^T x with both the
    linear offsets g_{k,i} and the curvature scales c_{k,i} varying per
    atom (``curvature_noise`` sets the scale spread), so stochastic
    gradients are genuinely state dependent.  ``hetero_shift`` spreads
    the gbar_k apart (zeta* > 0); ``identical`` gives every worker the
    same objective and atom set (zeta* = 0).
    """
    rng = np.random.default_rng(seed)
    base_dir = rng.standard_normal(d)
    h_shared = None
    locals_ = []
    for k in range(n_workers):
        if identical and h_shared is not None:
            hmat, gs, scales = h_shared
        else:
            factor = rng.standard_normal((d, d)) / np.sqrt(d)
            alpha = 1.0 + (0.0 if identical else curvature_spread * rng.random())
            hmat = alpha * np.eye(d) + factor @ factor.T
            gbar = base_dir + (0.0 if identical else hetero_shift * rng.standard_normal(d))
            gs = gbar + noise_scale * rng.standard_normal((atoms_per_worker, d))
            scales = 1.0 + curvature_noise * rng.uniform(-1.0, 1.0, size=atoms_per_worker)
            if identical:
                h_shared = (hmat, gs, scales)
        locals_.append(_quadratic_local(hmat, gs, scales))
    fed = FederatedInstance(
        n_workers=n_workers,
        local_dim=d,
        local_problems=locals_,
        partition_ids=list(range(n_workers)),
        meta={"generator": "federated_quadratics", "seed": seed,
              "identical": identical},
    )
    fed.x_star = _solve_average_minimizer(locals_, d)
    fed.sigma_star_sq, fed.zeta_star_sq = federated_heterogeneity(fed, fed.x_star)
    return fed


def _quadratic_local(hmat, atom_gs, atom_scales=None):
    """Worker objective built from atoms (1/2) s_i x^T H x - g_i^T x."""
    hmat = np.asarray(hmat, dtype=float)
    atom_gs = np.asarray(atom_gs, dtype=float)
    n_atoms, d = atom_gs.shape
    scales = (np.ones(n_atoms) if atom_scales is None
              else np.asarray(atom_scales, dtype=float))
    gbar = atom_gs.mean(axis=0)
    mean_scale = float(scales.mean())
    h_eff = mean_scale * hmat
    eigvals = np.linalg.eigvalsh(h_eff)

    def value(x):
        return float(0.5 * mean_scale * x @ hmat @ x - gbar @ x)

    def full_grad(x):
        return h_eff @ x - gbar

    def atom_grad(x, i):
        return scales[i] * (hmat @ x) - atom_gs[i]

    def batch_grad(x, idx):
        return float(scales[idx].mean()) * (hmat @ x) - atom_gs[idx].mean(axis=0)

    return LocalProblem(
        dim=d,
        n_atoms=n_atoms,
        value_oracle=value,
        full_gradient_oracle=full_grad,
        atom_gradient_oracle=atom_grad,
        batch_gradient_oracle=batch_grad,
        smoothness_L=float(eigvals[-1]),
        strong_convexity_mu=float(eigvals[0]),
        atom_smoothness_L=float(scales.max() * np.linalg.eigvalsh(hmat)[-1]),
        quadratic=(h_eff, gbar),
    )


def make_federated_logreg(seed, n_workers, samples_per_worker, d,
                          weight_decay, hetero_shift=1.0):
    """Federated binary logistic regression over disjoint synthetic shards.

    Each worker draws features around its own seeded center (data
    heterogeneity grows with ``hetero_shift``) and labels from a shared
    planted linear model with 10% label noise.
    """
    rng = np.random.default_rng(seed)
    w_true = rng.standard_normal(d) * 2.0 / np.sqrt(d)
    locals_ = []
    for _ in range(n_workers):
        center = hetero_shift * rng.standard_normal(d) / np.sqrt(d)
        feats = center + rng.standard_normal((samples_per_worker, d))
        z = feats @ w_true
        y = np.where(rng.random(samples_per_worker) < 1.0 / (1.0 + np.exp(-z)), 1.0, -1.0)
        flip = rng.random(samples_per_worker) < 0.1
        y[flip] = -y[flip]
        locals_.append(_logreg_local(feats, y, weight_decay))
    fed = FederatedInstance(
        n_workers=n_workers,
        local_dim=d + 1,
        local_problems=locals_,
        partition_ids=list(range(n_workers)),
        meta={"generator": "federated_logreg", "seed": seed},
    )
    fed.x_star = _solve_average_minimizer(
        locals_, d + 1, tol=1e-11,
        max_iter=int(2e6),
    )
    fed.sigma_star_sq, fed.zeta_star_sq = federated_heterogeneity(fed, fed.x_star)
    return fed


def _logreg_local(features, labels, weight_decay):
    feats = np.asarray(features, dtype=float)
    y = np.asarray(labels, dtype=float)
    n_samples, d = feats.shape
    xmat = np.hstack([feats, np.ones((n_samples, 1))])
    lam_max = float(np.linalg.eigvalsh(xmat.T @ xmat)[-1])
    row_sq = np.sum(xmat**2, axis=1)

    def value(w):
        return float(np.mean(_log1pexp(-y * (xmat @ w))) + 0.5 * weight_decay * w @ w)

    def full_grad(w):
        sig = 1.0 / (1.0 + np.exp(y * (xmat @ w)))
        return -(xmat.T @ (y * sig)) / n_samples + weight_decay * w

    def atom_grad(w, i):
        sig = 1.0 / (1.0 + np.exp(y[i] * (xmat[i] @ w)))
        return -xmat[i] * (y[i] * sig) + weight_decay * w

    def batch_grad(w, idx):
        rows = xmat[idx]
        sig = 1.0 / (1.0 + np.exp(y[idx] * (rows @ w)))
        return -(rows.T @ (y[idx] * sig)) / len(idx) + weight_decay * w

    return LocalProblem(
        dim=d + 1,
        n_atoms=n_samples,
        value_oracle=value,
        full_gradient_oracle=full_grad,
        atom_gradient_oracle=atom_grad,
        batch_gradient_oracle=batch_grad,
        smoothness_L=lam_max / (4.0 * n_samples) + weight_decay,
        strong_convexity_mu=weight_decay,
        atom_smoothness_L=float(np.max(row_sq)) / 4.0 + weight_decay,
    )


def lift_consensus(fed):
    """Lift a federated instance to a single consensus-constrained problem.

    The lifted objective is F(x) = sum_k f_k(x^(k)) on R^{nd} with the
    consensus subspace, L = max_k L_k and mu = min_k mu_k.  One lifted
    stochastic gradient is one simultaneous draw of one atom per worker,
    i.e. n local gradient evaluations, and counts as a single gradient
    unit in the complexity accounting (the anchor full gradient costs
    N = max_k N_k units).  The integer atom index i maps to the aligned
    tuple (i, ..., i), which preserves the finite-sum mean identity;
    samplers always draw independent per-worker tuples.
    """
    dims = {lp.dim for lp in fed.local_problems}
    if len(dims) != 1:
        raise MismatchedDims(f"local problems disagree on dimension: {sorted(dims)}")
    d = dims.pop()
    n = fed.n_workers
    locals_ = fed.local_problems
    subspace = consensus_subspace(n, d)

    def value(x):
        blocks = x.reshape(n, d)
        return float(sum(lp.value_oracle(blocks[k]) for k, lp in enumerate(locals_)))

    def full_grad(x):
        blocks = x.reshape(n, d)
        return np.concatenate(
            [lp.full_gradient_oracle(blocks[k]) for k, lp in enumerate(locals_)]
        )

    def atom_grad(x, i):
        blocks = x.reshape(n, d)
        idx = np.broadcast_to(i, (n,)) if np.isscalar(i) else np.asarray(i)
        return np.concatenate(
            [lp.atom_gradient_oracle(blocks[k], int(idx[k])) for k, lp in enumerate(locals_)]
        )

    def batch_grad(x, idx):
        # idx has shape (batch, n); column k holds worker k's draws
        blocks = x.reshape(n, d)
        idx = np.atleast_2d(idx)
        return np.concatenate(
            [lp.batch_gradient_oracle(blocks[k], idx[:, k]) for k, lp in enumerate(locals_)]
        )

    return LcpProblem(
        dim=n * d,
        n_atoms=max(lp.n_atoms for lp in locals_),
        subspace=subspace,
        value_oracle=value,
        full_gradient_oracle=full_grad,
        atom_gradient_oracle=atom_grad,
        batch_gradient_oracle=batch_grad,
        smoothness_L=max(lp.smoothness_L for lp in locals_),
        strong_convexity_mu=min(lp.strong_convexity_mu for lp in locals_),
        atom_smoothness_L=max(lp.atom_smoothness_L for lp in locals_),
        kind="lifted",
        lifted=fed,
        meta={"n_workers": n, "local_dim": d},
    )


# ---------------------------------------------------------------------------
# reference solutions, constants, variance at the optimum
# ---------------------------------------------------------------------------

def solve_reference(problem, tol=1e-10, max_iter=2_000_000):
    """High-accuracy constrained minimizer x* of the problem.

    Quadratics are solved through the KKT system
    [2C, A; A^T, 0] [x; nu] = [-g; b]; everything else runs projected
    full-gradient descent with eta = 1/L until both the projected
    gradient norm and the feasibility residual are below ``tol``.
    """
    sub = problem.subspace
    if problem.lifted is not None:
        fed = problem.lifted
        x_loc = (fed.x_star if fed.x_star is not None
                 else _solve_average_minimizer(fed.local_problems, fed.local_dim))
        return np.tile(x_loc, fed.n_workers)
    if problem.quadratic is not None and sub.kind == "explicit":
        cmat, g = problem.quadratic
        p = problem.dim
        amat = sub.a_matrix
        m = amat.shape[1]
        kkt = np.zeros((p + m, p + m))
        kkt[:p, :p] = 2.0 * cmat
        kkt[:p, p:] = amat
        kkt[p:, :p] = amat.T
        rhs = np.concatenate([-g, sub.b_vector])
        try:
            sol = np.linalg.solve(kkt, rhs)
        except np.linalg.LinAlgError:
            sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
        return sol[:p]

    # projected full-gradient descent in shifted coordinates
    shift = sub.feasible_shift
    z = project_null(sub, -shift)
    eta = 1.0 / problem.smoothness_L
    for _ in range(max_iter):
        grad = problem.full_gradient_oracle(z + shift)
        gproj = project_null(sub, grad)
        if np.linalg.norm(gproj) <= tol:
            x = z + shift
            if feasibility_residual(sub, x) <= tol * (1.0 + np.linalg.norm(x)):
                return x
        z = project_null(sub, z - eta * grad)
    raise NoConvergence(f"projected gradient descent: {max_iter} iterations at tol={tol}")


def estimate_smoothness(problem, power_tol=1e-6, pairs=1000, seed=0):
    """Smoothness constant of the full objective.

    Quadratics run power iteration on C (to ``power_tol`` relative) and
    return 2*lambda_max; the logistic generators return their analytic
    bound; anything else falls back to 1.5x the largest empirical
    gradient Lipschitz ratio over seeded random pairs.
    """
    if problem.quadratic is not None:
        cmat = problem.quadratic[0]
        return 2.0 * _power_iteration(cmat, power_tol)
    if problem.kind in ("logreg", "lifted"):
        return problem.smoothness_L
    return 1.5 * empirical_gradient_lipschitz(problem, pairs=pairs, seed=seed)


def _power_iteration(mat, rtol, max_iter=100_000):
    # residual-based stop: ||C v - lam v|| <= rtol * lam makes the Rayleigh
    # quotient accurate to O(rtol^2 / gap), comfortably inside rtol relative
    rng = np.random.default_rng(12345)
    v = rng.standard_normal(mat.shape[0])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = mat @ v
        lam = float(v @ w)
        resid = np.linalg.norm(w - lam * v)
        nrm = np.linalg.norm(w)
        if nrm == 0:
            return 0.0
        v = w / nrm
        if resid <= rtol * max(abs(lam), 1e-300):
            return lam
    return lam


def empirical_gradient_lipschitz(problem, pairs=1000, seed=0):
    """Max of ||grad F(x) - grad F(y)|| / ||x - y|| over seeded random pairs."""
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(pairs):
        x = rng.standard_normal(problem.dim)
        y = rng.standard_normal(problem.dim)
        num = np.linalg.norm(
            problem.full_gradient_oracle(x) - problem.full_gradient_oracle(y)
        )
        den = np.linalg.norm(x - y)
        if den > 0:
            best = max(best, float(num / den))
    return best


def variance_at_optimum(problem, x_star, enumeration_cap=200_000):
    """Exact stochastic-gradient variances at the constrained optimum.

    Returns (sigma_perp_sq, sigma_range_sq), the exact finite-sum
    expectations of ||P_{A-perp} grad F(x*; xi)||^2 and
    ||P_A grad F(x*; xi)||^2.  For lifted problems the expectation runs
    over independent per-worker draws: small product spaces are
    enumerated literally, larger ones use the factorized closed form
    (identical value).
    """
    x_star = np.asarray(x_star, dtype=float)
    sub = problem.subspace
    if feasibility_residual(sub, x_star) > 1e-6 * (1.0 + np.linalg.norm(x_star)):
        raise InfeasiblePoint("x_star does not satisfy the constraint")

    if problem.lifted is not None:
        return _lifted_variances(problem, x_star, enumeration_cap)

    perp_acc, range_acc = 0.0, 0.0
    for i in range(problem.n_atoms):
        grad = problem.atom_gradient_oracle(x_star, i)
        gperp = project_null(sub, grad)
        grange = grad - gperp
        perp_acc += float(gperp @ gperp)
        range_acc += float(grange @ grange)
    n = problem.n_atoms
    return perp_acc / n, range_acc / n


def _lifted_variances(problem, x_star, enumeration_cap):
    fed = problem.lifted
    n, d = fed.n_workers, fed.local_dim
    blocks = x_star.reshape(n, d)
    per_worker = [
        np.stack([lp.atom_gradient_oracle(blocks[k], i) for i in range(lp.n_atoms)])
        for k, lp in enumerate(fed.local_problems)
    ]
    counts = [g.shape[0] for g in per_worker]
    total = float(np.prod([float(c) for c in counts]))

    if total <= enumeration_cap:
        perp_acc, range_acc = 0.0, 0.0
        for combo in itertools.product(*[range(c) for c in counts]):
            grads = np.stack([per_worker[k][i] for k, i in enumerate(combo)])
            mean = grads.mean(axis=0)
            perp = n * float(mean @ mean)
            full = float(np.sum(grads * grads))
            perp_acc += perp
            range_acc += full - perp
        return perp_acc / total, range_acc / total

    # factorized exact expectation over the product distribution
    means = np.stack([g.mean(axis=0) for g in per_worker])
    variances = [float(np.mean(np.sum((g - m) ** 2, axis=1)))
                 for g, m in zip(per_worker, means)]
    grand_mean = means.mean(axis=0)
    e_sq_full = float(sum(float(m @ m) + v for m, v in zip(means, variances)))
    perp = n * (float(grand_mean @ grand_mean) + sum(variances) / n**2)
    return perp, e_sq_full - perp


# ---------------------------------------------------------------------------
# snapshots
# ---------------------------------------------------------------------------

SNAPSHOT_VERSION = 1


def save_problem(problem, path):
    """Serialize a generated problem to an .npz container (row-major float64)."""
    meta = problem.meta
    gen = meta.get("generator")
    if gen in ("lcqp", "planted_quadratic"):
        # reconstruct from the arrays themselves for bit-exact round trips
        np.savez(
            path,
            schema=np.array([SNAPSHOT_VERSION]),
            kind=np.array(["lcqp"]),
            atoms=problem.meta["_atoms"],
            ridge=np.array([problem.meta["ridge"]]),
            g=problem.quadratic[1],
            a_matrix=problem.subspace.a_matrix,
            b=problem.subspace.b_vector,
        )
    elif gen == "logreg":
        np.savez(
            path,
            schema=np.array([SNAPSHOT_VERSION]),
            kind=np.array(["logreg"]),
            features=problem.meta["_features"],
            labels=problem.meta["_labels"],
            weight_decay=np.array([meta["weight_decay"]]),
            n_classes=np.array([meta["n_classes"]]),
            a_matrix=problem.subspace.a_matrix,
            b=problem.subspace.b_vector,
        )
    elif gen == "network_flow":
        np.savez(
            path,
            schema=np.array([SNAPSHOT_VERSION]),
            kind=np.array(["network_flow"]),
            edges=np.array(meta["edges"], dtype=np.int64),
            node_rates=np.array(meta["node_rates"]),
            weights=np.array(meta["weights"]),
        )
    else:
        raise DimensionMismatch(f"problem kind {gen!r} has no snapshot format")


def load_problem(path):
    """Rebuild a problem from :func:`save_problem` output, bit for bit."""
    with np.load(path, allow_pickle=False) as data:
        kind = str(data["kind"][0])
        if kind == "lcqp":
            problem = lcqp_from_atoms(
                data["atoms"], float(data["ridge"][0]), data["g"],
                data["a_matrix"], data["b"],
            )
            problem.meta.update(generator="lcqp", _atoms=np.array(data["atoms"]))
            return problem
        if kind == "logreg":
            problem = logreg_from_data(
                data["features"], data["labels"], float(data["weight_decay"][0]),
                data["a_matrix"], int(data["n_classes"][0]), data["b"],
            )
            problem.meta.update(
                generator="logreg",
                _features=np.array(data["features"]),
                _labels=np.array(data["labels"]),
            )
            return problem
        if kind == "network_flow":
            return make_network_flow(
                [tuple(int(v) for v in row) for row in data["edges"]],
                data["node_rates"], data["weights"],
            )
    raise DimensionMismatch(f"unknown snapshot kind {kind!r}")
