"""Built-in verification suites.

Each check re-derives its expected values through an independent route
(pseudoinverse projectors, explicit constraint matrices, literal
finite-sum enumeration, textbook transcriptions of the update rules)
and compares the library against it at a fixed tolerance.  The quick
suite covers the algebraic and reduction checks; the full suite adds
the lifted-equivalence and convergence-regression checks.

Checks look up ``projection.project_null`` at call time on purpose, so
a corrupted projector is caught by name.
"""

import math

import numpy as np

from . import projection
from .federated import equivalence_harness, local_asvrg, local_sgd, local_svrg
from .metrics import complexity_to_eps
from .problems import (
    _partition_stream,
    make_constrained_logreg,
    make_federated_quadratics,
    make_lcqp,
    planted_spectrum_quadratic,
    lift_consensus,
    solve_reference,
    variance_at_optimum,
)
from .solvers import SolverConfig, default_step_size, dp_asvrg, dp_sgd, dp_svrg, restart_asvrg, theta_next


def _pinv_null(a_matrix):
    p = a_matrix.shape[0]
    return np.eye(p) - a_matrix @ np.linalg.pinv(a_matrix)


def _chained_difference(n, d):
    bmat = np.zeros((n - 1, n))
    for k in range(n - 1):
        bmat[k, k] = 1.0
        bmat[k, k + 1] = -1.0
    return np.kron(bmat, np.eye(d)).T


# ---------------------------------------------------------------------------
# criterion 1: projector algebra
# ---------------------------------------------------------------------------

def check_projector_algebra(n_subspaces=200, seed=0):
    """Linearity, non-expansiveness, orthogonal decomposition, idempotency
    within 1e-10 relative on seeded random subspaces; the range projector
    matches the pseudoinverse oracle within 1e-9."""
    rng = np.random.default_rng(seed)
    for k in range(n_subspaces):
        p = int(rng.integers(2, 65))
        m = int(rng.integers(1, min(p, 17)))
        a = rng.standard_normal((p, m))
        sub = projection.build_subspace(a)
        oracle = _pinv_null(a)
        for _ in range(3):
            x = rng.standard_normal(p)
            y = rng.standard_normal(p)
            alpha, beta = rng.standard_normal(2)
            xn = np.linalg.norm(x)
            against = oracle @ x
            got = projection.project_null(sub, x)
            if np.linalg.norm(got - against) > 1e-9 * (1 + xn):
                return False, f"pseudoinverse-oracle mismatch on subspace {k}"
            lin = projection.project_null(sub, alpha * x + beta * y)
            lin_ref = alpha * got + beta * projection.project_null(sub, y)
            scale = abs(alpha) * xn + abs(beta) * np.linalg.norm(y)
            if np.linalg.norm(lin - lin_ref) > 1e-10 * (1 + scale):
                return False, f"linearity violated on subspace {k}"
            if (np.linalg.norm(got - projection.project_null(sub, y))
                    > np.linalg.norm(x - y) * (1 + 1e-10)):
                return False, f"non-expansiveness violated on subspace {k}"
            u = projection.project_range(sub, x)
            if np.linalg.norm(u + got - x) > 1e-10 * (1 + xn):
                return False, f"orthogonal decomposition violated on subspace {k}"
            if abs(u @ got) > 1e-10 * (1 + xn**2):
                return False, f"orthogonality violated on subspace {k}"
            again = projection.project_null(sub, got)
            if np.linalg.norm(again - got) > 1e-10 * (1 + xn):
                return False, f"idempotency violated on subspace {k}"
    return True, f"{n_subspaces} subspaces, all projector algebra within tolerance"


# ---------------------------------------------------------------------------
# criterion 2: consensus equivalence
# ---------------------------------------------------------------------------

def check_consensus_equivalence(seed=1):
    """Block averaging equals the explicit chained-difference null
    projector within 1e-12 for all (n, d) in {2..5} x {1..3}."""
    rng = np.random.default_rng(seed)
    for n in range(2, 6):
        for d in range(1, 4):
            sub = projection.build_subspace(_chained_difference(n, d))
            for _ in range(5):
                x = rng.standard_normal(n * d)
                fast = projection.consensus_project(x, n, d)
                explicit = projection.project_null(sub, x)
                if np.max(np.abs(fast - explicit)) > 1e-12:
                    return False, f"consensus-equivalence violated at n={n}, d={d}"
    return True, "consensus projector equals explicit null projector on the grid"


# ---------------------------------------------------------------------------
# criterion 3: variance identities of the lifting
# ---------------------------------------------------------------------------

def check_lifted_variance_identities(n_instances=20, seed=2):
    """sigma_perp^2 = sigma_*^2 and sigma_range^2 = n zeta_*^2 + (n-1) sigma_*^2,
    with the left sides computed by literal product-space enumeration."""
    rng = np.random.default_rng(seed)
    for k in range(n_instances):
        n = int(rng.integers(2, 5))
        d = int(rng.integers(2, 5))
        atoms = int(rng.integers(3, 7))
        fed = make_federated_quadratics(seed=1000 + k, n_workers=n, d=d,
                                        atoms_per_worker=atoms,
                                        hetero_shift=float(rng.uniform(0.0, 2.0)))
        lifted = lift_consensus(fed)
        x_tilde = np.tile(fed.x_star, n)
        sig_perp, sig_range = variance_at_optimum(lifted, x_tilde)
        expect_range = n * fed.zeta_star_sq + (n - 1) * fed.sigma_star_sq
        if abs(sig_perp - fed.sigma_star_sq) > 1e-8 * (1 + fed.sigma_star_sq):
            return False, f"sigma_perp identity violated on instance {k}"
        if abs(sig_range - expect_range) > 1e-8 * (1 + sig_range):
            return False, f"sigma_range identity violated on instance {k}"
    return True, f"{n_instances} federated instances satisfy both variance identities"


# ---------------------------------------------------------------------------
# criterion 4: the momentum sequence
# ---------------------------------------------------------------------------

def check_theta_sequence(steps=10_000):
    """Boundedness, monotonicity, contraction for 1e4 emissions at
    delta in {0, 0.01, 0.3}, plus the 2/(s+2) bound at delta = 0."""
    for delta in (0.0, 0.01, 0.3):
        theta = 1.0 + delta
        prev = theta
        for s in range(steps):
            theta = theta_next(theta, delta)
            if not (2 * delta - 1e-12 <= theta <= 1 + delta + 1e-12):
                return False, f"boundedness violated at delta={delta}, step {s}"
            if theta > prev + 1e-12:
                return False, f"monotonicity violated at delta={delta}, step {s}"
            if theta - 2 * delta > (1 - delta) * (prev - 2 * delta) + 1e-12:
                return False, f"contraction violated at delta={delta}, step {s}"
            prev = theta
    theta = 1.0
    for s in range(steps):
        theta = theta_next(theta, 0.0)
        if theta > 2.0 / (s + 3.0) + 1e-12:
            return False, f"2/(s+2) rate bound violated at step {s}"
    return True, "theta sequence invariants hold for 1e4 steps at each delta"


# ---------------------------------------------------------------------------
# criterion 5: reductions to textbook methods
# ---------------------------------------------------------------------------

def check_reductions(steps=200):
    """E=1 DP-SGD vs projected SGD, m=E=1 full-batch DP-ASVRG vs
    accelerated gradient, n=1 local methods vs single-machine methods;
    per-iterate agreement within 1e-10."""
    # -- DP-SGD vs projected SGD ------------------------------------------
    prob = make_lcqp(seed=50, p=10, n_atoms=30, m_constraints=3,
                     eigen_floor=0.5, eigen_ceil=2.0)
    eta = 0.2 / prob.smoothness_L
    cfg = SolverConfig(variant="dp_sgd", eta=eta, gap_E=1, total_T=steps,
                       batch=1, seed=5)
    seen = []
    dp_sgd(prob, cfg, iterate_hook=lambda t, x: seen.append(x))
    proj = _pinv_null(prob.subspace.a_matrix)
    stream = _partition_stream(5, 0)
    x = np.zeros(prob.dim)
    for t in range(steps):
        i = int(stream.integers(0, prob.n_atoms, size=1)[0])
        x = proj @ (x - eta * prob.atom_gradient_oracle(x, i))
        if np.max(np.abs(seen[t] - x)) > 1e-10 * (1 + np.max(np.abs(x))):
            return False, f"DP-SGD reduction to projected SGD broke at t={t}"

    # -- DP-ASVRG vs accelerated gradient ---------------------------------
    L = prob.smoothness_L
    eta = 1.0 / (L * (1.0 + math.sqrt(2.0)))
    cfg = SolverConfig(variant="dp_asvrg", eta=eta, gap_E=1, inner_m=1,
                       stages_S=steps, batch=prob.n_atoms, seed=0, mu=0.0)
    snaps = []
    dp_asvrg(prob, cfg, iterate_hook=lambda t, x, u: snaps.append(x))
    y = proj @ np.zeros(prob.dim)
    u = y.copy()
    theta = 1.0 - eta * L / (1.0 - eta * L)
    for t in range(steps):
        u = proj @ (u - (eta / theta) * (proj @ prob.full_gradient_oracle(y)))
        y = proj @ (y + theta * (u - y))
        if np.max(np.abs(snaps[t] - y)) > 1e-10 * (1 + np.max(np.abs(y))):
            return False, f"DP-ASVRG reduction to accelerated gradient broke at t={t}"
        theta = 2.0 / (1.0 + math.sqrt(1.0 + 4.0 / theta**2))

    # -- n=1 local methods vs single-machine methods ----------------------
    fed = make_federated_quadratics(seed=51, n_workers=1, d=5, atoms_per_worker=8)
    lp = fed.local_problems[0]
    eta = 0.15 / lp.smoothness_L
    cfg = SolverConfig(variant="dp_sgd", eta=eta, gap_E=4, total_T=steps, batch=1,
                       seed=6)
    seen = []
    local_sgd(fed, cfg, iterate_hook=lambda t, x: seen.append(x))
    stream = _partition_stream(6, fed.partition_ids[0])
    x = np.zeros(5)
    for t in range(steps):
        i = int(stream.integers(0, lp.n_atoms, size=1)[0])
        x = x - eta * lp.atom_gradient_oracle(x, i)
        if np.max(np.abs(seen[t] - x)) > 1e-10 * (1 + np.max(np.abs(x))):
            return False, f"Local SGD reduction to single-machine SGD broke at t={t}"

    m = 10
    n_stages = max(1, steps // m)
    cfg = SolverConfig(variant="dp_svrg", eta=eta, gap_E=m, inner_m=m,
                       stages_S=n_stages, batch=1, seed=7)
    seen = []
    local_svrg(fed, cfg, iterate_hook=lambda t, x: seen.append(x))
    stream = _partition_stream(7, fed.partition_ids[0])
    mu = lp.strong_convexity_mu
    decay = 1.0 - mu * eta
    snap = np.zeros(5)
    x = snap.copy()
    t_global = 0
    for _ in range(n_stages):
        anchor = lp.full_gradient_oracle(snap)
        hist = []
        for t in range(m):
            hist.append(x.copy())
            i = int(stream.integers(0, lp.n_atoms, size=1)[0])
            g = (lp.atom_gradient_oracle(x, i) - lp.atom_gradient_oracle(snap, i)
                 + anchor)
            x = x - eta * g
            if np.max(np.abs(seen[t_global] - x)) > 1e-10 * (1 + np.max(np.abs(x))):
                return False, f"Local SVRG reduction broke at t={t_global}"
            t_global += 1
        weights = decay ** np.arange(m)[::-1]
        snap = weights @ np.stack(hist) / weights.sum()

    cfg = SolverConfig(variant="dp_asvrg", eta=eta, gap_E=1, inner_m=1,
                       stages_S=steps, batch=lp.n_atoms, seed=0, mu=0.0)
    seen = []
    local_asvrg(fed, cfg, iterate_hook=lambda t, x, u: seen.append(x))
    theta = 1.0 - eta * lp.smoothness_L / (1.0 - eta * lp.smoothness_L)
    y = np.zeros(5)
    u = y.copy()
    for t in range(steps):
        u = u - (eta / theta) * lp.full_gradient_oracle(y)
        y = y + theta * (u - y)
        if np.max(np.abs(seen[t] - y)) > 1e-10 * (1 + np.max(np.abs(y))):
            return False, f"Local ASVRG reduction broke at t={t}"
        theta = 2.0 / (1.0 + math.sqrt(1.0 + 4.0 / theta**2))
    return True, "all reductions agree per iterate within 1e-10"


# ---------------------------------------------------------------------------
# criterion 6: lifted equivalence
# ---------------------------------------------------------------------------

def check_lifted_equivalence():
    """Local SGD/SVRG/ASVRG with coupled RNG match the DP solvers on the
    lifted problem to 1e-9 per iterate (n=4, 200 iterations); decoupled
    seeds must fail."""
    fed = make_federated_quadratics(seed=60, n_workers=4, d=3, atoms_per_worker=10,
                                    hetero_shift=1.5)
    configs = {
        "dp_sgd": SolverConfig(variant="dp_sgd", eta="auto", gap_E=5, total_T=200,
                               batch=1, seed=11),
        "dp_svrg": SolverConfig(variant="dp_svrg", eta="auto", gap_E=5, inner_m=25,
                                stages_S=8, batch=1, seed=11),
        "dp_asvrg": SolverConfig(variant="dp_asvrg", eta="auto", gap_E=5, inner_m=25,
                                 stages_S=8, batch=1, seed=11),
    }
    for variant, cfg in configs.items():
        report = equivalence_harness(fed, variant, cfg)
        if report["n_compared"] != 200:
            return False, f"{variant}: compared {report['n_compared']} != 200 iterations"
        if not report["pass"]:
            return False, (f"{variant}: lifted equivalence gap "
                           f"{report['max_iterate_gap']:.2e} exceeds 1e-9")
    for variant in ("dp_sgd", "dp_svrg"):
        control = equivalence_harness(fed, variant, configs[variant],
                                      decouple_seeds=True)
        if control["pass"]:
            return False, (f"negative control passed for {variant}: "
                           "the equivalence check has no power")
    return True, "all three local methods track the lifted solvers to 1e-9"


# ---------------------------------------------------------------------------
# criterion 7: variance reduction removes the noise floor
# ---------------------------------------------------------------------------

def check_noise_floor_separation():
    """Constant-step DP-SGD plateaus on a kappa ~ 1e3 constrained logistic
    regression; DP-SVRG at the variance-reduced step size reaches 1e-3 of
    that floor within 40 stages."""
    probe = make_constrained_logreg(seed=101, n_samples=500, d=20, n_classes=2,
                                    m_constraints=10, weight_decay=1e-8)
    wd = (probe.smoothness_L - 1e-8) / 999.0  # kappa = 1e3
    prob = make_constrained_logreg(seed=101, n_samples=500, d=20, n_classes=2,
                                   m_constraints=10, weight_decay=wd)
    L = prob.smoothness_L
    kappa = L / prob.strong_convexity_mu
    f_star = prob.value_oracle(solve_reference(prob, tol=1e-10))

    sgd_cfg = SolverConfig(variant="dp_sgd", eta=1.0 / (50 * L), gap_E=10,
                           total_T=20_000, batch=1, seed=1, record_every=5)
    _, sgd_trace = dp_sgd(prob, sgd_cfg, f_star=f_star)
    subs = np.asarray(sgd_trace.suboptimality)
    floor = float(np.mean(subs[3 * len(subs) // 4:]))
    mid = float(np.mean(subs[len(subs) // 2: 3 * len(subs) // 4]))
    if not (floor > 0 and 0.5 <= mid / floor <= 2.0):
        return False, f"DP-SGD did not plateau (floor {floor:.2e}, mid {mid:.2e})"

    svrg_cfg = SolverConfig(variant="dp_svrg", eta="auto", gap_E=10, inner_m=1000,
                            stages_S=40, batch=1, seed=1, record_every=10**9)
    _, svrg_trace = dp_svrg(prob, svrg_cfg, f_star=f_star)
    target = 1e-3 * floor
    reached = min(svrg_trace.suboptimality) <= target
    if not reached:
        return False, (f"DP-SVRG best {min(svrg_trace.suboptimality):.2e} "
                       f"did not reach 1e-3 x floor = {target:.2e} in 40 stages")
    return True, (f"kappa={kappa:.0f}: SGD floor {floor:.2e}, SVRG reached "
                  f"{min(svrg_trace.suboptimality):.2e} <= {target:.2e}")


# ---------------------------------------------------------------------------
# criterion 8: linear convergence of DP-SVRG
# ---------------------------------------------------------------------------

def check_svrg_linear_convergence():
    """Per-stage contraction factor <= 0.9 after stage 1 on strongly
    convex LCQP (p=50, N=200, m=N) for E in {1, 5}, three seeds."""
    for seed in (1, 2, 3):
        prob = make_lcqp(seed=seed, p=50, n_atoms=200, m_constraints=8,
                         eigen_floor=0.5, eigen_ceil=2.5)
        kappa = prob.smoothness_L / prob.strong_convexity_mu
        if kappa > 100:
            return False, f"generated kappa {kappa:.1f} > 100"
        f_star = prob.value_oracle(solve_reference(prob))
        for gap_e in (1, 5):
            cfg = SolverConfig(variant="dp_svrg", eta="auto", gap_E=gap_e,
                               inner_m=200, stages_S=8, batch=1, seed=seed,
                               record_every=10**9)
            _, trace = dp_svrg(prob, cfg, f_star=f_star)
            subs = trace.suboptimality[:-1]  # stage rows
            ratios = [subs[i + 1] / subs[i] for i in range(1, len(subs) - 1)
                      if subs[i] > 1e-13]
            if not ratios or max(ratios) > 0.9:
                worst = max(ratios) if ratios else float("nan")
                return False, (f"seed {seed}, E={gap_e}: worst per-stage "
                               f"ratio {worst:.3f} > 0.9")
    return True, "per-stage contraction <= 0.9 for E in {1,5} on three seeds"


# ---------------------------------------------------------------------------
# criterion 9: projection-efficiency trend
# ---------------------------------------------------------------------------

def check_projection_efficiency_trend():
    """projections_to_eps(1e-6) non-increasing across E in {1, 2, 5, 10}
    in the N/E >= kappa regime, all runs sharing the E=10 step size."""
    probe = make_constrained_logreg(seed=202, n_samples=500, d=20, n_classes=2,
                                    m_constraints=10, weight_decay=1e-8)
    wd = (probe.smoothness_L - 1e-8) / 39.0  # kappa = 40 <= N / E_max = 50
    prob = make_constrained_logreg(seed=202, n_samples=500, d=20, n_classes=2,
                                   m_constraints=10, weight_decay=wd)
    f_star = prob.value_oracle(solve_reference(prob, tol=1e-11))
    eta = default_step_size("dp_svrg", prob.smoothness_L,
                            prob.strong_convexity_mu, 10)
    counts = []
    for gap_e in (1, 2, 5, 10):
        cfg = SolverConfig(variant="dp_svrg", eta=eta, gap_E=gap_e, inner_m=500,
                           stages_S=25, batch=1, seed=7, record_every=1)
        _, trace = dp_svrg(prob, cfg, f_star=f_star)
        row = complexity_to_eps(trace, 1e-6)
        if not row.reached:
            return False, f"E={gap_e} never reached 1e-6"
        counts.append(row.projections_to_eps)
    if any(counts[i + 1] > counts[i] for i in range(len(counts) - 1)):
        return False, f"projections_to_eps not non-increasing: {counts}"
    return True, f"projections to 1e-6 across E in (1,2,5,10): {counts}"


# ---------------------------------------------------------------------------
# criterion 10: restart halving
# ---------------------------------------------------------------------------

def check_restart_halving():
    """Each of the first five restarts reduces the suboptimality by at
    least x0.5 on a kappa = 100 quadratic with m = kappa E, E = 4."""
    for seed in (1, 2, 3):
        eigs = np.geomspace(0.05, 5.0, 12)
        prob = planted_spectrum_quadratic(seed=seed, p=12, n_atoms=60,
                                          m_constraints=3, eigenvalues=eigs)
        kappa = prob.smoothness_L / prob.strong_convexity_mu
        f_star = prob.value_oracle(solve_reference(prob))
        cfg = SolverConfig(variant="dp_asvrg", eta="auto", gap_E=4,
                           inner_m=int(round(kappa)) * 4, stages_S=3, batch=1,
                           seed=seed, record_every=10**9)
        _, trace = restart_asvrg(prob, cfg, eps_target=1e-9, f_star=f_star)
        last_by_restart = {}
        for i in range(len(trace)):
            last_by_restart[trace.restart[i]] = trace.suboptimality[i]
        seq = [last_by_restart[r] for r in sorted(last_by_restart)]
        if len(seq) < 6:
            return False, f"seed {seed}: only {len(seq) - 1} restarts recorded"
        ratios = [seq[i + 1] / seq[i] for i in range(5)]
        if max(ratios) > 0.5:
            return False, f"seed {seed}: restart ratios {ratios} exceed 0.5"
    return True, "five consecutive restarts each halve the gap on three seeds"


# ---------------------------------------------------------------------------
# criterion 11: acceleration ordering
# ---------------------------------------------------------------------------

def check_acceleration_ordering():
    """DP-ASVRG reaches 1e-6 in strictly fewer stages than DP-SVRG on a
    kappa = 1e4 quadratic with matched (m, E, step size, budget)."""
    def stages_to(trace, eps):
        for i in range(len(trace)):
            if trace.suboptimality[i] <= eps:
                return trace.stage[i]
        return None

    for seed in (1, 2, 3):
        fast = np.linspace(0.25, 0.5, 30)
        band = np.linspace(1.5e-3, 2.5e-3, 9)
        eigs = np.concatenate([fast, band, [5e-5]])
        band_idx = list(range(30, 39))
        prob = planted_spectrum_quadratic(
            seed=seed, p=40, n_atoms=80, m_constraints=6, eigenvalues=eigs,
            minimizer_modes=list(range(0, 30, 3)) + band_idx,
            constraint_free_modes=band_idx)
        f_star = prob.value_oracle(solve_reference(prob))
        eta = 0.02 / prob.smoothness_L
        shared = dict(eta=eta, gap_E=4, inner_m=400, stages_S=220, batch=2,
                      seed=seed, record_every=10**9)
        _, tr_svrg = dp_svrg(prob, SolverConfig(variant="dp_svrg", **shared),
                             f_star=f_star)
        _, tr_asvrg = dp_asvrg(prob, SolverConfig(variant="dp_asvrg", **shared),
                               f_star=f_star)
        s_svrg = stages_to(tr_svrg, 1e-6)
        s_asvrg = stages_to(tr_asvrg, 1e-6)
        if s_svrg is None or s_asvrg is None:
            return False, f"seed {seed}: a solver missed 1e-6 within budget"
        if not s_asvrg < s_svrg:
            return False, (f"seed {seed}: accelerated {s_asvrg} stages not "
                           f"fewer than plain {s_svrg}")
    return True, "accelerated variant reaches 1e-6 in strictly fewer stages"


# ---------------------------------------------------------------------------
# criterion 12: unbiasedness of the projected control variate
# ---------------------------------------------------------------------------

def check_control_variate_unbiasedness(n_states=50, seed=3):
    """The exact atom average of P(g) equals P(grad F) within 1e-10."""
    prob = make_lcqp(seed=70, p=12, n_atoms=40, m_constraints=4,
                     eigen_floor=0.5, eigen_ceil=2.0)
    rng = np.random.default_rng(seed)
    for k in range(n_states):
        x = rng.standard_normal(prob.dim)
        snap = rng.standard_normal(prob.dim)
        anchor = projection.project_null(prob.subspace,
                                         prob.full_gradient_oracle(snap))
        acc = np.zeros(prob.dim)
        for i in range(prob.n_atoms):
            g = (prob.atom_gradient_oracle(x, i)
                 - prob.atom_gradient_oracle(snap, i) + anchor)
            acc += projection.project_null(prob.subspace, g)
        lhs = acc / prob.n_atoms
        rhs = projection.project_null(prob.subspace, prob.full_gradient_oracle(x))
        if np.max(np.abs(lhs - rhs)) > 1e-10 * (1 + np.max(np.abs(rhs))):
            return False, f"projected control variate biased at state {k}"
    return True, f"unbiased at all {n_states} random states"


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------

QUICK_CHECKS = [
    ("projector-algebra", check_projector_algebra),
    ("consensus-equivalence", check_consensus_equivalence),
    ("lifted-variance-identities", check_lifted_variance_identities),
    ("theta-sequence", check_theta_sequence),
    ("reductions", check_reductions),
    ("control-variate-unbiasedness", check_control_variate_unbiasedness),
]

FULL_CHECKS = QUICK_CHECKS + [
    ("lifted-equivalence", check_lifted_equivalence),
    ("noise-floor-separation", check_noise_floor_separation),
    ("svrg-linear-convergence", check_svrg_linear_convergence),
    ("projection-efficiency-trend", check_projection_efficiency_trend),
    ("restart-halving", check_restart_halving),
    ("acceleration-ordering", check_acceleration_ordering),
]


def run_suite(level="quick", report=print):
    """Run the named verification suite; returns (all_passed, results)."""
    checks = QUICK_CHECKS if level == "quick" else FULL_CHECKS
    results = []
    all_ok = True
    for name, fn in checks:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash is a failure, not an abort
            ok, detail = False, f"crashed: {exc!r}"
        results.append((name, ok, detail))
        all_ok &= ok
        if report is not None:
            report(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    return all_ok, results
