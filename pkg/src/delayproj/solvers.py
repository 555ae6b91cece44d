"""Delayed-projection stochastic solvers for linearly constrained problems.

Three variants share the same skeleton: run cheap unconstrained
stochastic-gradient steps and call the null-space projection only at the
iterations listed in a projection schedule whose largest gap is E.

* ``dp_sgd``    - plain stochastic gradient with delayed projection and a
  geometrically weighted averaged output;
* ``dp_svrg``   - stage-based variance reduction: each stage anchors a
  projected full gradient and runs control-variate inner steps;
* ``dp_asvrg``  - adds a momentum sequence theta on top of the
  variance-reduced stages (two coupled sequences u and x).

All solvers operate in shifted coordinates z = x - y*, where y* is the
least-norm feasible point, so the working constraint is always A^T z = 0;
outputs are shifted back.  Runs are single-threaded, own their RNG
stream, and are bit-reproducible for a fixed (problem seed, solver seed).
"""

import math
import time
from dataclasses import dataclass

import numpy as np

from .errors import (
    DeltaOutOfRange,
    DimensionMismatch,
    DomainError,
    GapViolation,
    NonFiniteIterate,
    StepTooLarge,
    ThetaOutOfRange,
)
from .metrics import ComplexityCounters, RunTrace
from .projection import feasibility_residual, project_null

MU_EPS = 1e-12  # below this, strong convexity is treated as zero


# ---------------------------------------------------------------------------
# projection schedule
# ---------------------------------------------------------------------------

class ProjectionSchedule:
    """Sorted projection iterations I within [1, total] with gap <= gap_E."""

    def __init__(self, total, gap_E, indices):
        self.total = total
        self.gap_E = gap_E
        self.indices = tuple(indices)
        self._index_set = frozenset(self.indices)

    def __contains__(self, t):
        return t in self._index_set

    def __len__(self):
        return len(self.indices)

    def __repr__(self):
        return f"ProjectionSchedule(total={self.total}, gap_E={self.gap_E}, |I|={len(self)})"


def make_schedule(total, gap_E, indices=None):
    """Projection schedule for ``total`` iterations with maximum gap ``gap_E``.

    The default is {E, 2E, ...} plus a forced terminal projection at
    ``total`` so the final iterate is feasible.  A custom index set is
    accepted if its gaps (including from 0 to the first index) never
    exceed ``gap_E``.
    """
    if not 1 <= gap_E <= total:
        raise GapViolation(f"need 1 <= gap_E <= total, got gap_E={gap_E}, total={total}")
    if indices is None:
        idx = list(range(gap_E, total + 1, gap_E))
        if not idx or idx[-1] != total:
            idx.append(total)
    else:
        idx = sorted(int(i) for i in indices)
        if any(i < 1 or i > total for i in idx):
            raise GapViolation("schedule indices must lie in [1, total]")
        prev = 0
        for i in idx:
            if i - prev > gap_E:
                raise GapViolation(f"gap {i - prev} between {prev} and {i} exceeds {gap_E}")
            prev = i
    return ProjectionSchedule(total=total, gap_E=gap_E, indices=tuple(idx))


# ---------------------------------------------------------------------------
# solver configuration
# ---------------------------------------------------------------------------

@dataclass
class SolverConfig:
    """Knobs for one solver run.

    ``eta="auto"`` resolves the variant's default step size;
    ``mu=None`` uses the problem's strong-convexity constant (pass 0.0
    to force the generally-convex weighting/momentum on a strongly
    convex problem).  ``theta`` overrides the constant momentum
    coefficient in the strongly convex accelerated variant.
    """

    variant: str = "dp_sgd"
    eta: "float | str" = "auto"
    gap_E: int = 1
    inner_m: int | None = None
    stages_S: int | None = None
    total_T: int | None = None
    mu: float | None = None
    batch: int = 1
    seed: int = 0
    record_every: int = 1
    theta: float | None = None

    def validate(self):
        if self.variant not in ("dp_sgd", "dp_svrg", "dp_asvrg"):
            raise DomainError(f"unknown variant {self.variant!r}")
        if self.gap_E < 1:
            raise DomainError("gap_E must be >= 1")
        if self.batch < 1:
            raise DomainError("batch must be >= 1")
        if self.variant == "dp_sgd":
            if self.total_T is None or self.total_T < 1:
                raise DomainError("dp_sgd needs total_T >= 1")
        else:
            if self.inner_m is None or self.stages_S is None:
                raise DomainError("variance-reduced variants need inner_m and stages_S")
            if self.inner_m < self.gap_E:
                raise DomainError("need inner_m >= gap_E")
            if self.stages_S < 1:
                raise DomainError("need stages_S >= 1")
        return self


# ---------------------------------------------------------------------------
# step sizes and the momentum sequence
# ---------------------------------------------------------------------------

def default_step_size(variant, L, mu, E, m=None, S=None):
    """Default constant step size for each variant.

    dp_sgd uses min{1/(10L), 1/(mu + 25L(E-1))}; dp_svrg the four-term
    bracket min{1/(mu+25L(E-1)), 1/(10L), 1/(L(3+2E)), 1/(mu+24L(2E-1))}.
    The accelerated variant returns eta with eta*L =
    min{2/(m/k + sqrt((m/k)^2 + 108(E^2-1))), 1/(1+sqrt(1+27(E^2-1))),
    (m/((E^2-1)^2 k))^(1/3)} for mu > 0 (k = L/mu), and
    min{1/(1+sqrt(1+max(1, 18(E^2-1)))), sqrt(ln S / S)/(3 sqrt(E^2-1))}
    for mu = 0, where the max(1, .) keeps the recursive momentum start
    strictly interior at E = 1 (there eta = 1/(L(1+sqrt(2)))).
    """
    if L <= 0:
        raise DomainError("need L > 0")
    mu = 0.0 if mu is None or mu < MU_EPS else float(mu)
    e2 = float(E) ** 2 - 1.0
    if variant == "dp_sgd":
        cands = [1.0 / (10.0 * L)]
        denom = mu + 25.0 * L * (E - 1)
        if denom > 0:
            cands.append(1.0 / denom)
        return min(cands)
    if variant == "dp_svrg":
        cands = [1.0 / (10.0 * L), 1.0 / (L * (3.0 + 2.0 * E)),
                 1.0 / (mu + 24.0 * L * (2.0 * E - 1.0))]
        denom = mu + 25.0 * L * (E - 1)
        if denom > 0:
            cands.append(1.0 / denom)
        return min(cands)
    if variant == "dp_asvrg":
        if mu > 0:
            if m is None:
                raise DomainError("dp_asvrg with mu > 0 needs the inner loop count m")
            kappa = L / mu
            ratio = m / kappa
            cands = [2.0 / (ratio + math.sqrt(ratio**2 + 108.0 * e2)),
                     1.0 / (1.0 + math.sqrt(1.0 + 27.0 * e2))]
            if e2 > 0:
                cands.append((m / (e2**2 * kappa)) ** (1.0 / 3.0))
            return min(cands) / L
        cands = [1.0 / (1.0 + math.sqrt(1.0 + max(1.0, 18.0 * e2)))]
        if e2 > 0 and S is not None and S >= 2:
            cands.append(math.sqrt(math.log(S) / S) / (3.0 * math.sqrt(e2)))
        return min(cands) / L
    raise DomainError(f"unknown variant {variant!r}")


def theta_next(theta_s, delta):
    """Next momentum coefficient: the positive root of
    (1 - theta' + delta) / ((1 - delta) theta'^2) = 1 / theta_s^2.

    Evaluated in the cancellation-free form
    2(1+delta) / (1 + sqrt(1 + 4(1-delta^2)/theta_s^2)); lies in
    [2*delta, theta_s].
    """
    if not 0.0 <= delta < 1.0:
        raise DomainError(f"delta must be in [0, 1), got {delta}")
    if theta_s < 2.0 * delta - 1e-12 or theta_s > 1.0 + delta + 1e-12:
        raise DomainError(f"theta_s={theta_s} outside [2*delta, 1+delta] for delta={delta}")
    if theta_s <= 0.0:
        return 0.0
    return 2.0 * (1.0 + delta) / (1.0 + math.sqrt(1.0 + 4.0 * (1.0 - delta**2) / theta_s**2))


@dataclass
class ThetaState:
    """Momentum coefficient sequence of the accelerated solver.

    Constant theta = 2*delta + sqrt(4*delta^2 + eta*mu*m) under strong
    convexity; otherwise the recursive sequence started at
    theta_0 = 1 - eta*L/(1 - eta*L) and advanced by :func:`theta_next`.
    """

    delta: float
    theta: float
    mode: str  # "constant" | "recursive"

    def advance(self):
        if self.mode == "recursive":
            self.theta = theta_next(self.theta, self.delta)
        return self.theta


def _make_theta_state(delta, eta, L, mu, m, theta_override=None):
    if mu > 0:
        theta = (2.0 * delta + math.sqrt(4.0 * delta**2 + eta * mu * m)
                 if theta_override is None else float(theta_override))
        mode = "constant"
    else:
        if theta_override is not None:
            theta = float(theta_override)
        else:
            x = eta * L
            theta = 1.0 - x / (1.0 - x)
        mode = "recursive"
    if not (2.0 * delta < theta <= 1.0 + delta + 1e-12):
        raise ThetaOutOfRange(
            f"theta={theta:.6g} outside (2*delta, 1+delta] for delta={delta:.6g}"
        )
    return ThetaState(delta=delta, theta=theta, mode=mode)


# ---------------------------------------------------------------------------
# shared run plumbing
# ---------------------------------------------------------------------------

class _Run:
    """Shifted-coordinate workspace shared by the three solvers."""

    def __init__(self, problem, config, x0, f_star, run_id):
        config.validate()
        self.problem = problem
        self.config = config
        sub = problem.subspace
        self.sub = sub
        self.shift = sub.feasible_shift
        self.shifted = bool(np.any(self.shift != 0.0))
        if x0 is None:
            z0 = np.zeros(problem.dim)
        else:
            x0 = np.asarray(x0, dtype=float)
            if x0.shape != (problem.dim,):
                raise DimensionMismatch(f"x0 must have length {problem.dim}")
            z0 = x0 - self.shift if self.shifted else x0.copy()
        self.z0 = z0
        self.L = problem.smoothness_L
        self.mu = problem.strong_convexity_mu if config.mu is None else float(config.mu)
        if self.mu < MU_EPS:
            self.mu = 0.0
        if config.eta == "auto":
            self.eta = default_step_size(config.variant, self.L, self.mu, config.gap_E,
                                         m=config.inner_m, S=config.stages_S)
        else:
            self.eta = float(config.eta)
        if self.eta * self.L > 0.5 * (1.0 + 1e-12):
            raise StepTooLarge(
                f"eta*L = {self.eta * self.L:.4g} > 1/2 is outside every admissible regime"
            )
        self.full_batch = config.batch >= problem.n_atoms
        self.sampler = None if self.full_batch else problem.make_sampler(config.seed)
        self.counters = ComplexityCounters()
        self.trace = RunTrace(run_id=run_id, variant=config.variant)
        self.f_star = f_star
        self._t0 = time.perf_counter_ns()
        self._events = 0

    # -- oracles in shifted coordinates -------------------------------------

    def to_x(self, z):
        return z + self.shift if self.shifted else z

    def value(self, z):
        return self.problem.value_oracle(self.to_x(z))

    def grad_full(self, z):
        return self.problem.full_gradient_oracle(self.to_x(z))

    def grad_batch(self, z, idx):
        return self.problem.batch_gradient_oracle(self.to_x(z), idx)

    def draw(self):
        return None if self.full_batch else self.sampler.draw(self.config.batch)

    def stoch_grad(self, z, idx):
        """Mean stochastic gradient; idx None means the exact full gradient."""
        if idx is None:
            self.counters.gradients_G += self.problem.n_atoms
            return self.grad_full(z)
        self.counters.gradients_G += self.config.batch
        return self.grad_batch(z, idx)

    def proj(self, z):
        return project_null(self.sub, z)

    def check_finite(self, z):
        if not np.all(np.isfinite(z)):
            raise NonFiniteIterate("iterate became non-finite; reduce the step size")

    # -- trace ---------------------------------------------------------------

    def subopt(self, z_feasible):
        if self.f_star is None:
            return math.nan
        return self.value(z_feasible) - self.f_star

    def record_event(self, z_feasible, z_iterate=None, force=False):
        """Record a projection-event row (thinned by record_every)."""
        self._events += 1
        if not force and (self._events % max(1, self.config.record_every)) != 0:
            return
        probe = z_feasible if z_iterate is None else z_iterate
        self.trace.record(
            self.counters,
            self.subopt(z_feasible),
            feasibility_residual(self.sub, self.to_x(probe)),
            wall_ns=time.perf_counter_ns() - self._t0,
        )

    def record_stage(self, z_feasible):
        """Stage-boundary row; never thinned by record_every."""
        self.trace.record(
            self.counters,
            self.subopt(z_feasible),
            feasibility_residual(self.sub, self.to_x(z_feasible)),
            wall_ns=time.perf_counter_ns() - self._t0,
        )

    def record_final(self, z_feasible):
        self.trace.record(
            self.counters,
            self.subopt(z_feasible),
            feasibility_residual(self.sub, self.to_x(z_feasible)),
            wall_ns=time.perf_counter_ns() - self._t0,
        )


# ---------------------------------------------------------------------------
# DP-SGD
# ---------------------------------------------------------------------------

def dp_sgd(problem, config, x0=None, f_star=None, iterate_hook=None):
    """Delayed-projection SGD.

    Runs x_t = x_{t-1} - eta * grad F(x_{t-1}; xi), projecting onto the
    feasible subspace only when t is in the schedule, and returns the
    projected geometrically weighted average of x_0 .. x_{T-1} (weights
    (1 - mu*eta)^{T-1-j}; plain average when mu = 0).

    Returns (y_hat, trace).
    """
    run = _Run(problem, config, x0, f_star, run_id="dp_sgd")
    schedule = make_schedule(config.total_T, config.gap_E)
    decay = 1.0 - run.mu * run.eta

    z = run.z0.copy()
    avg_num = np.zeros_like(z)
    avg_den = 0.0
    for t in range(1, config.total_T + 1):
        avg_num = decay * avg_num + z
        avg_den = decay * avg_den + 1.0
        g = run.stoch_grad(z, run.draw())
        z = z - run.eta * g
        run.counters.iterations_T += 1
        if t in schedule:
            z = run.proj(z)
            run.counters.projections_P += 1
            run.check_finite(z)
            run.record_event(run.proj(avg_num / avg_den), z_iterate=z)
        if iterate_hook is not None:
            iterate_hook(t, run.to_x(z))
    y_z = run.proj(avg_num / avg_den)
    run.counters.projections_P += 1
    run.record_final(y_z)
    return run.to_x(y_z), run.trace


# ---------------------------------------------------------------------------
# DP-SVRG
# ---------------------------------------------------------------------------

def dp_svrg(problem, config, x0=None, f_star=None, iterate_hook=None):
    """Delayed-projection SVRG.

    Each stage projects and anchors the full gradient of the snapshot,
    runs m control-variate inner steps
    g = grad F(x; xi) - grad F(x_snap; xi) + h with projections at the
    schedule hits, then restarts from the projected last iterate and
    re-snapshots the projected geometrically weighted average of
    x_0 .. x_{m-1}.  Output: last snapshot when mu > 0, mean of
    snapshots when mu = 0.

    Returns (y_hat, trace).
    """
    run = _Run(problem, config, x0, f_star, run_id="dp_svrg")
    m, n_stages = config.inner_m, config.stages_S
    schedule = make_schedule(m, config.gap_E)
    decay = 1.0 - run.mu * run.eta

    z_snap = run.proj(run.z0)
    z = z_snap.copy()
    out_sum = np.zeros_like(z)
    t_global = 0
    for _ in range(n_stages):
        run.counters.stages_S += 1
        run.counters.projections_P += 1  # boundary bundle: anchor + stage close
        anchor = run.proj(run.grad_full(z_snap))
        run.counters.gradients_G += problem.n_atoms
        snap_num = np.zeros_like(z)
        snap_den = 0.0
        for t in range(m):
            snap_num = decay * snap_num + z
            snap_den = decay * snap_den + 1.0
            idx = run.draw()
            if idx is None:
                g = run.grad_full(z) - run.grad_full(z_snap) + anchor
                run.counters.gradients_G += 2 * problem.n_atoms
            else:
                g = run.grad_batch(z, idx) - run.grad_batch(z_snap, idx) + anchor
                run.counters.gradients_G += 2 * config.batch
            z = z - run.eta * g
            run.counters.iterations_T += 1
            t_global += 1
            if (t + 1) in schedule:
                z = run.proj(z)
                run.counters.projections_P += 1
                run.check_finite(z)
                run.record_event(z)
            if iterate_hook is not None:
                iterate_hook(t_global, run.to_x(z))
        z = run.proj(z)
        z_snap = run.proj(snap_num / snap_den)
        out_sum += z_snap
        run.record_stage(z_snap)  # stage rows track the snapshot
    y_z = out_sum / n_stages if run.mu == 0.0 else z_snap
    run.record_final(y_z)
    return run.to_x(y_z), run.trace


# ---------------------------------------------------------------------------
# DP-ASVRG
# ---------------------------------------------------------------------------

def dp_asvrg(problem, config, x0=None, f_star=None, iterate_hook=None):
    """Delayed-projection accelerated SVRG.

    On top of the SVRG stage structure, maintains the auxiliary sequence
    u with u_{t+1} = u_t - (eta/theta_s) g_t and
    x_{t+1} = x_snap + theta_s (u_{t+1} - x_snap), projecting both at
    schedule hits.  Stage end: u restarts from the projected u_m, the
    snapshot is the projected mean of x_1 .. x_m, and x restarts from
    the snapshot.  theta is constant 2*delta + sqrt(4*delta^2 +
    eta*mu*m) when mu > 0 and follows the recursive root sequence when
    mu = 0.  Output: mean of snapshots when mu > 0, last snapshot when
    mu = 0.

    Returns (y_hat, trace).
    """
    run = _Run(problem, config, x0, f_star, run_id="dp_asvrg")
    m, n_stages = config.inner_m, config.stages_S
    schedule = make_schedule(m, config.gap_E)
    e2 = float(config.gap_E) ** 2 - 1.0
    delta = 9.0 * e2 * (run.eta * run.L) ** 2
    if not 0.0 <= delta < 1.0:
        raise DeltaOutOfRange(
            f"delta = 9(E^2-1)(eta L)^2 = {delta:.4g} is outside [0, 1); reduce eta"
        )
    theta_state = _make_theta_state(delta, run.eta, run.L, run.mu, m,
                                    theta_override=config.theta)

    z_snap = run.proj(run.z0)
    z = z_snap.copy()
    u = z_snap.copy()
    out_sum = np.zeros_like(z)
    t_global = 0
    for _ in range(n_stages):
        run.counters.stages_S += 1
        run.counters.projections_P += 1  # boundary bundle
        anchor = run.proj(run.grad_full(z_snap))
        run.counters.gradients_G += problem.n_atoms
        theta = theta_state.theta
        eta_over_theta = run.eta / theta
        snap_sum = np.zeros_like(z)
        for t in range(m):
            idx = run.draw()
            if idx is None:
                g = run.grad_full(z) - run.grad_full(z_snap) + anchor
                run.counters.gradients_G += 2 * problem.n_atoms
            else:
                g = run.grad_batch(z, idx) - run.grad_batch(z_snap, idx) + anchor
                run.counters.gradients_G += 2 * config.batch
            u = u - eta_over_theta * g
            z = z_snap + theta * (u - z_snap)
            run.counters.iterations_T += 1
            t_global += 1
            if (t + 1) in schedule:
                z = run.proj(z)
                u = run.proj(u)
                run.counters.projections_P += 1
                run.check_finite(z)
                run.record_event(z)
            snap_sum += z
            if iterate_hook is not None:
                iterate_hook(t_global, run.to_x(z), run.to_x(u))
        u = run.proj(u)
        z_snap = run.proj(snap_sum / m)
        z = z_snap.copy()
        out_sum += z_snap
        theta_state.advance()
        # stage rows track the snapshot (the anytime feasible iterate); the
        # mu > 0 output rule (mean of snapshots, used by restarts) is what
        # the final row and the return value report
        run.record_stage(z_snap)
    y_z = out_sum / n_stages if run.mu > 0.0 else z_snap
    run.record_final(y_z)
    return run.to_x(y_z), run.trace


# ---------------------------------------------------------------------------
# restarted DP-ASVRG
# ---------------------------------------------------------------------------

def restart_asvrg(problem, config, eps_target, x0=None, f_star=None):
    """Restarted accelerated solver for strongly convex problems.

    Repeatedly runs dp_asvrg for S stages (S auto-sized so one restart
    halves the expected error, or taken from ``config.stages_S``),
    re-initializing each restart at the previous output, until the
    estimated suboptimality drops below ``eps_target`` or the restart
    budget ceil(log2(F0/eps)) + 5 is exhausted.  On exhaustion the best
    iterate is returned and the trace is flagged
    ``extras['budget_exhausted'] = True``.

    Returns (y_hat, trace); the trace concatenates restarts with a
    restart-index column and cumulative counters.
    """
    if eps_target <= 0:
        raise DomainError("eps_target must be positive")
    if f_star is None:
        from .problems import solve_reference
        x_ref = solve_reference(problem)
        f_star = problem.value_oracle(x_ref)
    probe_cfg = SolverConfig(
        variant="dp_asvrg", eta=config.eta, gap_E=config.gap_E,
        inner_m=config.inner_m, stages_S=config.stages_S or 1, mu=config.mu,
        batch=config.batch, seed=config.seed, record_every=config.record_every,
        theta=config.theta,
    )
    probe = _Run(problem, probe_cfg, x0, f_star, run_id="restart_asvrg")
    if probe.mu <= 0:
        raise DomainError("restart_asvrg needs strong convexity (mu > 0)")

    trace = RunTrace(run_id="restart_asvrg", variant="dp_asvrg")
    totals = ComplexityCounters()
    z_feas = probe.proj(probe.z0)
    x_cur = probe.to_x(z_feas)
    sub0 = problem.value_oracle(x_cur) - f_star
    trace.record(totals, sub0, feasibility_residual(problem.subspace, x_cur))
    if sub0 <= eps_target:
        return x_cur, trace

    stages = config.stages_S if config.stages_S else _halving_stage_count(probe, config)
    budget = max(1, math.ceil(math.log2(max(sub0 / eps_target, 2.0)))) + 5
    best_x, best_sub = x_cur, sub0
    for restart in range(1, budget + 1):
        sub_cfg = SolverConfig(
            variant="dp_asvrg", eta=probe.eta, gap_E=config.gap_E,
            inner_m=config.inner_m, stages_S=stages, mu=config.mu,
            batch=config.batch, record_every=config.record_every,
            theta=config.theta,
            seed=int(np.random.SeedSequence(config.seed, spawn_key=(restart,))
                     .generate_state(1)[0]),
        )
        x_cur, child = dp_asvrg(problem, sub_cfg, x0=x_cur, f_star=f_star)
        base = (totals.iterations_T, totals.stages_S, totals.projections_P,
                totals.gradients_G, totals.comm_rounds)
        for i in range(len(child)):
            shifted = ComplexityCounters(
                iterations_T=base[0] + child.iter[i],
                stages_S=base[1] + child.stage[i],
                projections_P=base[2] + child.projections[i],
                gradients_G=base[3] + child.gradients[i],
                comm_rounds=base[4] + child.comm_rounds[i],
            )
            trace.record(shifted, child.suboptimality[i], child.feasibility[i],
                         wall_ns=child.wall_ns[i], restart=restart)
        totals = ComplexityCounters(
            iterations_T=base[0] + child.iter[-1],
            stages_S=base[1] + child.stage[-1],
            projections_P=base[2] + child.projections[-1],
            gradients_G=base[3] + child.gradients[-1],
            comm_rounds=base[4] + child.comm_rounds[-1],
        )
        sub = problem.value_oracle(x_cur) - f_star
        if sub < best_sub:
            best_x, best_sub = x_cur, sub
        if sub <= eps_target:
            trace.extras["restarts"] = restart
            return x_cur, trace
    trace.extras["budget_exhausted"] = True
    trace.extras["restarts"] = budget
    return best_x, trace


def _halving_stage_count(run, config):
    """Stage count per restart that halves the error (strongly convex rate)."""
    e2 = float(config.gap_E) ** 2 - 1.0
    delta = 9.0 * e2 * (run.eta * run.L) ** 2
    theta = (config.theta if config.theta is not None
             else 2.0 * delta + math.sqrt(4.0 * delta**2 + run.eta * run.mu * config.inner_m))
    s_est = 2.0 * ((1.0 + delta - theta) / (theta - 2.0 * delta)
                   + theta**2 / ((theta - 2.0 * delta) * run.eta * run.mu * config.inner_m))
    return max(1, math.ceil(s_est))
