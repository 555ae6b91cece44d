"""Local SGD / SVRG / ASVRG simulation over n workers.

Workers execute sequentially inside each logical step in a fixed order,
and every averaging uses the same reduction as the consensus projector
(`x.reshape(n, d).mean(axis=0)`), so a federated run and the
delayed-projection run on the lifted consensus problem perform
bit-identical arithmetic: synchronization is literally the projection.

Per-worker RNG streams are keyed by data partition id, never by worker
position, so permuting workers leaves the synchronized averages
unchanged and the draws match the lifted sampler column for column.
Full participation only; no stragglers or dropped messages.
"""

import math
import time
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NonFiniteIterate, StepTooLarge
from .metrics import ComplexityCounters, RunTrace
from .problems import _partition_stream, lift_consensus
from .solvers import (
    MU_EPS,
    SolverConfig,
    _make_theta_state,
    default_step_size,
    make_schedule,
)


@dataclass
class CommLog:
    """Synchronization accounting: one round per averaging event.

    A stage boundary (gather for the snapshot / next anchor) counts one
    round, matching the stage-boundary projection bundle of the
    delayed-projection solvers; a joint (u, x) synchronization is one
    round of two vectors per worker.
    """

    rounds: int = 0
    vectors_transferred: int = 0
    local_dim: int = 0

    def add_round(self, vectors):
        self.rounds += 1
        self.vectors_transferred += vectors

    @property
    def bytes_equivalent(self):
        return self.vectors_transferred * self.local_dim * 8


class _FedRun:
    """Shared plumbing for the three local methods."""

    def __init__(self, fed, config, variant, x0, f_star, run_id):
        cfg = SolverConfig(
            variant=variant, eta=config.eta, gap_E=config.gap_E,
            inner_m=config.inner_m, stages_S=config.stages_S,
            total_T=config.total_T, mu=config.mu, batch=config.batch,
            seed=config.seed, record_every=config.record_every,
            theta=config.theta,
        ).validate()
        self.fed = fed
        self.config = cfg
        self.n = fed.n_workers
        self.d = fed.local_dim
        self.locals = fed.local_problems
        self.L = max(lp.smoothness_L for lp in self.locals)
        mu_val = (min(lp.strong_convexity_mu for lp in self.locals)
                  if cfg.mu is None else float(cfg.mu))
        self.mu = 0.0 if mu_val < MU_EPS else mu_val
        if cfg.eta == "auto":
            self.eta = default_step_size(variant, self.L, self.mu, cfg.gap_E,
                                         m=cfg.inner_m, S=cfg.stages_S)
        else:
            self.eta = float(cfg.eta)
        if self.eta * self.L > 0.5 * (1.0 + 1e-12):
            raise StepTooLarge(f"eta*L = {self.eta * self.L:.4g} > 1/2")
        self.full_batch = cfg.batch >= max(lp.n_atoms for lp in self.locals)
        self.streams = [_partition_stream(cfg.seed, pid) for pid in fed.partition_ids]
        if x0 is None:
            x0 = np.zeros(self.d)
        self.x0 = np.asarray(x0, dtype=float)
        self.counters = ComplexityCounters()
        self.comm = CommLog(local_dim=self.d)
        self.trace = RunTrace(run_id=run_id, variant=run_id)
        self.f_star = f_star
        self._t0 = time.perf_counter_ns()
        self._events = 0

    def average(self, states):
        """The shared reduction; identical arithmetic to consensus_project."""
        return states.mean(axis=0)

    def worker_grads(self, states, snapshot=None, anchor=None):
        """One stochastic-gradient step worth of per-worker directions.

        Plain gradients when ``snapshot`` is None, otherwise the
        control-variate direction g_k - g_k(snapshot) + anchor.  Counts
        gradient work in lifted units (one unit = one draw on every
        worker).
        """
        out = np.empty_like(states)
        if self.full_batch:
            for k, lp in enumerate(self.locals):
                g = lp.full_gradient_oracle(states[k])
                if snapshot is not None:
                    g = (g - lp.full_gradient_oracle(snapshot)) + anchor
                out[k] = g
            units = max(lp.n_atoms for lp in self.locals)
        else:
            for k, lp in enumerate(self.locals):
                idx = self.streams[k].integers(0, lp.n_atoms, size=self.config.batch)
                g = lp.batch_gradient_oracle(states[k], idx)
                if snapshot is not None:
                    g = (g - lp.batch_gradient_oracle(snapshot, idx)) + anchor
                out[k] = g
            units = self.config.batch
        self.counters.gradients_G += units if snapshot is None else 2 * units
        return out

    def anchor_gradient(self, snapshot):
        """Average of local full gradients; one communication round."""
        grads = np.stack([lp.full_gradient_oracle(snapshot) for lp in self.locals])
        self.counters.gradients_G += max(lp.n_atoms for lp in self.locals)
        return self.average(grads)

    def sync_round(self, vectors_per_worker=1):
        self.comm.add_round(self.n * vectors_per_worker)
        self.counters.comm_rounds = self.comm.rounds

    def check_finite(self, states):
        if not np.all(np.isfinite(states)):
            raise NonFiniteIterate("worker state became non-finite; reduce the step size")

    def average_value(self, x):
        return self.fed.average_value(x)

    def subopt(self, x):
        if self.f_star is None:
            return math.nan
        return self.average_value(x) - self.f_star

    def consensus_residual(self, states):
        center = self.average(states)
        return float(np.max(np.linalg.norm(states - center, axis=1))) if self.n > 1 else 0.0

    def record_event(self, x_estimate, states, force=False):
        self._events += 1
        if not force and (self._events % max(1, self.config.record_every)) != 0:
            return
        self.trace.record(self.counters, self.subopt(x_estimate),
                          self.consensus_residual(states),
                          wall_ns=time.perf_counter_ns() - self._t0)

    def record_stage(self, x_estimate):
        self.trace.record(self.counters, self.subopt(x_estimate), 0.0,
                          wall_ns=time.perf_counter_ns() - self._t0)


def local_sgd(fed, config, x0=None, f_star=None, iterate_hook=None):
    """Local SGD: independent worker SGD with periodic averaging.

    Every worker runs plain SGD on its own objective; at schedule hits
    all workers are reset to the block average.  The output is the
    average over workers of the per-worker geometrically weighted
    iterate averages (weights (1 - mu*eta)^{T-1-j}), exactly the
    delayed-projection SGD output on the lifted problem.

    Returns (x_hat, trace); trace.extras carries the CommLog and the
    last synchronized average.
    """
    run = _FedRun(fed, config, "dp_sgd", x0, f_star, run_id="local_sgd")
    schedule = make_schedule(run.config.total_T, run.config.gap_E)
    decay = 1.0 - run.mu * run.eta

    states = np.tile(run.x0, (run.n, 1))
    avg_num = np.zeros_like(states)
    avg_den = 0.0
    last_sync = run.average(states)
    for t in range(1, run.config.total_T + 1):
        avg_num = decay * avg_num + states
        avg_den = decay * avg_den + 1.0
        grads = run.worker_grads(states)
        states = states - run.eta * grads
        run.counters.iterations_T += 1
        if t in schedule:
            last_sync = run.average(states)
            states = np.tile(last_sync, (run.n, 1))
            run.sync_round()
            run.check_finite(states)
            run.record_event(run.average(avg_num / avg_den), states)
        if iterate_hook is not None:
            iterate_hook(t, states.ravel())
    x_hat = run.average(avg_num / avg_den)
    run.sync_round()  # final gather for the output average
    run.trace.record(run.counters, run.subopt(x_hat), 0.0,
                     wall_ns=time.perf_counter_ns() - run._t0)
    run.trace.extras["comm_log"] = run.comm
    run.trace.extras["last_sync_average"] = last_sync
    return x_hat, run.trace


def local_svrg(fed, config, x0=None, f_star=None, iterate_hook=None):
    """Local SVRG: variance-reduced local steps with periodic averaging.

    Each stage broadcasts the anchor (the average of local full
    gradients at the shared snapshot, one round), runs m local
    control-variate steps with synchronization at schedule hits, then
    averages the workers for the next stage start and re-snapshots the
    averaged geometrically weighted iterate history.

    Returns (x_hat, trace).
    """
    run = _FedRun(fed, config, "dp_svrg", x0, f_star, run_id="local_svrg")
    m, n_stages = run.config.inner_m, run.config.stages_S
    schedule = make_schedule(m, run.config.gap_E)
    decay = 1.0 - run.mu * run.eta

    snapshot = run.x0.copy()
    states = np.tile(snapshot, (run.n, 1))
    out_sum = np.zeros(run.d)
    t_global = 0
    for _ in range(n_stages):
        run.counters.stages_S += 1
        run.sync_round()  # stage boundary: gather + anchor broadcast
        anchor = run.anchor_gradient(snapshot)
        snap_num = np.zeros_like(states)
        snap_den = 0.0
        for t in range(m):
            snap_num = decay * snap_num + states
            snap_den = decay * snap_den + 1.0
            grads = run.worker_grads(states, snapshot, anchor)
            states = states - run.eta * grads
            run.counters.iterations_T += 1
            t_global += 1
            if (t + 1) in schedule:
                states = np.tile(run.average(states), (run.n, 1))
                run.sync_round()
                run.check_finite(states)
                run.record_event(states[0], states)
            if iterate_hook is not None:
                iterate_hook(t_global, states.ravel())
        states = np.tile(run.average(states), (run.n, 1))
        snapshot = run.average(snap_num / snap_den)
        out_sum += snapshot
        run.record_stage(snapshot)  # stage rows track the snapshot
    x_hat = out_sum / n_stages if run.mu == 0.0 else snapshot
    run.trace.record(run.counters, run.subopt(x_hat), 0.0,
                     wall_ns=time.perf_counter_ns() - run._t0)
    run.trace.extras["comm_log"] = run.comm
    return x_hat, run.trace


def local_asvrg(fed, config, x0=None, f_star=None, iterate_hook=None):
    """Local accelerated SVRG: momentum sequence on top of Local SVRG.

    Workers maintain coupled sequences (u, x), synchronized jointly at
    schedule hits (one round of two vectors per worker); stage ends
    average u, snapshot the averaged mean of x_1 .. x_m, and restart x
    from the snapshot.

    Returns (x_hat, trace).
    """
    run = _FedRun(fed, config, "dp_asvrg", x0, f_star, run_id="local_asvrg")
    m, n_stages = run.config.inner_m, run.config.stages_S
    schedule = make_schedule(m, run.config.gap_E)
    e2 = float(run.config.gap_E) ** 2 - 1.0
    delta = 9.0 * e2 * (run.eta * run.L) ** 2
    theta_state = _make_theta_state(delta, run.eta, run.L, run.mu, m,
                                    theta_override=run.config.theta)

    snapshot = run.x0.copy()
    states = np.tile(snapshot, (run.n, 1))
    momenta = states.copy()
    out_sum = np.zeros(run.d)
    t_global = 0
    for _ in range(n_stages):
        run.counters.stages_S += 1
        run.sync_round()
        anchor = run.anchor_gradient(snapshot)
        theta = theta_state.theta
        eta_over_theta = run.eta / theta
        snap_sum = np.zeros_like(states)
        for t in range(m):
            grads = run.worker_grads(states, snapshot, anchor)
            momenta = momenta - eta_over_theta * grads
            states = snapshot + theta * (momenta - snapshot)
            run.counters.iterations_T += 1
            t_global += 1
            if (t + 1) in schedule:
                states = np.tile(run.average(states), (run.n, 1))
                momenta = np.tile(run.average(momenta), (run.n, 1))
                run.sync_round(vectors_per_worker=2)
                run.check_finite(states)
                run.record_event(states[0], states)
            snap_sum += states
            if iterate_hook is not None:
                iterate_hook(t_global, states.ravel(), momenta.ravel())
        momenta = np.tile(run.average(momenta), (run.n, 1))
        snapshot = run.average(snap_sum / m)
        states = np.tile(snapshot, (run.n, 1))
        out_sum += snapshot
        theta_state.advance()
        run.record_stage(snapshot)  # stage rows track the snapshot
    x_hat = out_sum / n_stages if run.mu > 0.0 else snapshot
    run.trace.record(run.counters, run.subopt(x_hat), 0.0,
                     wall_ns=time.perf_counter_ns() - run._t0)
    run.trace.extras["comm_log"] = run.comm
    return x_hat, run.trace


_LOCAL = {"dp_sgd": local_sgd, "dp_svrg": local_svrg, "dp_asvrg": local_asvrg}


def equivalence_harness(fed, variant, config, decouple_seeds=False):
    """Run Local-X and DP-X on the lifted problem side by side.

    Both sides consume identically constructed per-partition RNG
    streams, so the stacked worker states should track the lifted
    iterate to floating-point accuracy at every inner iteration.
    ``decouple_seeds=True`` runs the DP side on a different seed (a
    negative control: the comparison must then fail).

    Returns a dict with ``max_iterate_gap`` (inf-norm over all compared
    iterations) and ``pass``.
    """
    from . import solvers as _solvers

    if variant not in _LOCAL:
        raise DomainError(f"variant must be one of {sorted(_LOCAL)}, got {variant!r}")
    lifted = lift_consensus(fed)
    local_states = []
    lifted_states = []

    def local_hook(t, x, *_):
        local_states.append(np.array(x))

    def dp_hook(t, x, *_):
        lifted_states.append(np.array(x))

    _LOCAL[variant](fed, config, iterate_hook=local_hook)
    dp_cfg = SolverConfig(
        variant=variant, eta=config.eta, gap_E=config.gap_E,
        inner_m=config.inner_m, stages_S=config.stages_S, total_T=config.total_T,
        mu=config.mu, batch=config.batch, record_every=config.record_every,
        theta=config.theta,
        seed=config.seed + 1 if decouple_seeds else config.seed,
    )
    dp_fn = {"dp_sgd": _solvers.dp_sgd, "dp_svrg": _solvers.dp_svrg,
             "dp_asvrg": _solvers.dp_asvrg}[variant]
    dp_fn(lifted, dp_cfg, iterate_hook=dp_hook)

    n_compared = min(len(local_states), len(lifted_states))
    gap = 0.0
    scale = 0.0
    for a, b in zip(local_states[:n_compared], lifted_states[:n_compared]):
        gap = max(gap, float(np.max(np.abs(a - b))))
        scale = max(scale, float(np.max(np.abs(a))))
    passed = gap <= 1e-9 * (1.0 + scale)
    return {"max_iterate_gap": gap, "pass": passed, "n_compared": n_compared,
            "scale": scale}
