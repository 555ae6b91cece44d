"""Federated simulation tests: reductions at n = 1, exact equivalence with
the delayed-projection solvers on the lifted problem, and communication
accounting."""

import numpy as np
import pytest

from delayproj import (
    SolverConfig,
    dp_svrg,
    equivalence_harness,
    lift_consensus,
    local_asvrg,
    local_sgd,
    local_svrg,
    make_federated_logreg,
    make_federated_quadratics,
    solve_reference,
)
from delayproj.problems import FederatedInstance, _partition_stream

import oracles


def fed_quad(seed=1, n=4, d=3, atoms=12, hetero=1.0):
    return make_federated_quadratics(seed=seed, n_workers=n, d=d,
                                     atoms_per_worker=atoms, hetero_shift=hetero)


# ---------------------------------------------------------------------------
# n = 1 reductions
# ---------------------------------------------------------------------------

def test_local_sgd_n1_is_plain_sgd():
    fed = fed_quad(seed=5, n=1, d=4, atoms=10)
    lp = fed.local_problems[0]
    eta = 0.2 / lp.smoothness_L
    cfg = SolverConfig(variant="dp_sgd", eta=eta, gap_E=3, total_T=200, batch=1,
                       seed=7)
    seen = []
    local_sgd(fed, cfg, iterate_hook=lambda t, x: seen.append(x.copy()))
    stream = _partition_stream(7, fed.partition_ids[0])
    draws = [stream.integers(0, lp.n_atoms, size=1) for _ in range(200)]
    ref = oracles.plain_sgd(lp.atom_gradient_oracle, draws, np.zeros(4), eta)
    for a, b in zip(seen, ref):
        assert np.max(np.abs(a - b)) < 1e-10


def test_local_svrg_n1_is_plain_svrg():
    fed = fed_quad(seed=6, n=1, d=3, atoms=8)
    lp = fed.local_problems[0]
    eta = 0.15 / lp.smoothness_L
    m, S = 6, 4
    cfg = SolverConfig(variant="dp_svrg", eta=eta, gap_E=m, inner_m=m, stages_S=S,
                       batch=1, seed=9)
    seen = []
    local_svrg(fed, cfg, iterate_hook=lambda t, x: seen.append(x.copy()))
    stream = _partition_stream(9, fed.partition_ids[0])
    draws = [stream.integers(0, lp.n_atoms, size=1) for _ in range(m * S)]
    stages = [draws[s * m:(s + 1) * m] for s in range(S)]
    ref = oracles.plain_svrg(lp.full_gradient_oracle, lp.atom_gradient_oracle,
                             stages, np.zeros(3), eta, lp.strong_convexity_mu, m)
    assert len(seen) == len(ref)
    for a, b in zip(seen, ref):
        assert np.max(np.abs(a - b)) < 1e-12 * (1 + np.max(np.abs(b)))


def test_local_asvrg_n1_full_batch_is_accelerated_gradient():
    fed = fed_quad(seed=8, n=1, d=4, atoms=6)
    lp = fed.local_problems[0]
    eta = 1.0 / (lp.smoothness_L * (1.0 + np.sqrt(2.0)))
    cfg = SolverConfig(variant="dp_asvrg", eta=eta, gap_E=1, inner_m=1,
                       stages_S=200, batch=lp.n_atoms, seed=0, mu=0.0)
    seen = []
    local_asvrg(fed, cfg, iterate_hook=lambda t, x, u: seen.append(x.copy()))
    theta0 = 1.0 - eta * lp.smoothness_L / (1.0 - eta * lp.smoothness_L)
    ref = oracles.nag_linear_coupling(np.eye(4), lp.full_gradient_oracle,
                                      np.zeros(4), eta, 200, theta0)
    for a, b in zip(seen, ref):
        assert np.max(np.abs(a - b)) < 1e-10


def test_local_sgd_e1_is_minibatch_parallel_sgd():
    fed = fed_quad(seed=11, n=3, d=3, atoms=9)
    eta = 0.1 / max(lp.smoothness_L for lp in fed.local_problems)
    cfg = SolverConfig(variant="dp_sgd", eta=eta, gap_E=1, total_T=150, batch=1,
                       seed=13)
    seen = []
    local_sgd(fed, cfg, iterate_hook=lambda t, x: seen.append(x.copy()))
    # oracle: one shared parameter, stepped by the average worker gradient
    streams = [_partition_stream(13, pid) for pid in fed.partition_ids]
    x = np.zeros(3)
    for t in range(150):
        grads = []
        for k, lp in enumerate(fed.local_problems):
            idx = streams[k].integers(0, lp.n_atoms, size=1)
            grads.append(lp.batch_gradient_oracle(x, idx))
        x = x - eta * np.mean(grads, axis=0)
        stacked = seen[t].reshape(3, 3)
        assert np.max(np.abs(stacked - x)) < 1e-9 * (1 + np.max(np.abs(x)))


# ---------------------------------------------------------------------------
# lifted equivalence
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("variant,cfg_kwargs", [
    ("dp_sgd", dict(total_T=200, gap_E=5)),
    ("dp_svrg", dict(inner_m=25, stages_S=8, gap_E=5)),
    ("dp_asvrg", dict(inner_m=25, stages_S=8, gap_E=5)),
])
def test_coupled_equivalence(variant, cfg_kwargs):
    fed = fed_quad(seed=21, n=4, d=3, atoms=10, hetero=1.5)
    cfg = SolverConfig(variant=variant, eta="auto", batch=1, seed=3, **cfg_kwargs)
    report = equivalence_harness(fed, variant, cfg)
    assert report["n_compared"] == 200
    assert report["pass"], report


def test_coupled_equivalence_logreg():
    fed = make_federated_logreg(seed=31, n_workers=3, samples_per_worker=20, d=4,
                                weight_decay=1e-2)
    cfg = SolverConfig(variant="dp_svrg", eta="auto", gap_E=4, inner_m=12,
                       stages_S=4, batch=2, seed=5)
    report = equivalence_harness(fed, "dp_svrg", cfg)
    assert report["pass"], report


def test_decoupled_seeds_break_equivalence():
    fed = fed_quad(seed=22, n=4, d=3, atoms=10)
    cfg = SolverConfig(variant="dp_sgd", eta="auto", gap_E=5, total_T=200,
                       batch=1, seed=3)
    report = equivalence_harness(fed, "dp_sgd", cfg, decouple_seeds=True)
    assert not report["pass"]


def test_full_batch_equivalence_is_exact():
    fed = fed_quad(seed=23, n=3, d=2, atoms=6)
    big = max(lp.n_atoms for lp in fed.local_problems)
    cfg = SolverConfig(variant="dp_sgd", eta="auto", gap_E=4, total_T=100,
                       batch=big, seed=0)
    report = equivalence_harness(fed, "dp_sgd", cfg)
    assert report["max_iterate_gap"] <= 1e-12


# ---------------------------------------------------------------------------
# communication accounting and consensus invariants
# ---------------------------------------------------------------------------

def test_comm_rounds_equal_dp_projections():
    fed = fed_quad(seed=24, n=4, d=3, atoms=10)
    lifted = lift_consensus(fed)
    cfg = SolverConfig(variant="dp_svrg", eta="auto", gap_E=5, inner_m=23,
                       stages_S=6, batch=1, seed=8)
    _, local_trace = local_svrg(fed, cfg)
    _, dp_trace = dp_svrg(lifted, cfg)
    assert local_trace.comm_rounds[-1] == dp_trace.projections[-1]
    comm = local_trace.extras["comm_log"]
    assert comm.rounds == local_trace.comm_rounds[-1]
    assert comm.bytes_equivalent == comm.vectors_transferred * fed.local_dim * 8


def test_post_sync_consensus_is_exact():
    fed = fed_quad(seed=25, n=5, d=3, atoms=8)
    cfg = SolverConfig(variant="dp_sgd", eta="auto", gap_E=4, total_T=60,
                       batch=1, seed=2)
    states_at_sync = []
    sched_hits = set(range(4, 61, 4))

    def hook(t, x):
        if t in sched_hits:
            states_at_sync.append(x.reshape(5, 3))

    local_sgd(fed, cfg, iterate_hook=hook)
    for block in states_at_sync:
        center = block.mean(axis=0)
        dev = np.max(np.linalg.norm(block - center, axis=1))
        assert dev <= 1e-12 * (1 + np.linalg.norm(center))


def test_worker_order_independence():
    fed = fed_quad(seed=26, n=4, d=3, atoms=9, hetero=2.0)
    perm = [2, 0, 3, 1]
    fed_perm = FederatedInstance(
        n_workers=4, local_dim=3,
        local_problems=[fed.local_problems[i] for i in perm],
        partition_ids=[fed.partition_ids[i] for i in perm],
    )
    cfg = SolverConfig(variant="dp_sgd", eta="auto", gap_E=3, total_T=90,
                       batch=1, seed=17)
    x_a, _ = local_sgd(fed, cfg)
    x_b, _ = local_sgd(fed_perm, cfg)
    assert np.max(np.abs(x_a - x_b)) <= 1e-12 * (1 + np.max(np.abs(x_a)))


def test_local_sgd_logs_last_sync_average():
    fed = fed_quad(seed=27, n=3, d=2, atoms=6)
    cfg = SolverConfig(variant="dp_sgd", eta="auto", gap_E=5, total_T=20,
                       batch=1, seed=1)
    _, trace = local_sgd(fed, cfg)
    assert trace.extras["last_sync_average"].shape == (2,)


# ---------------------------------------------------------------------------
# variance reduction removes the noise floor
# ---------------------------------------------------------------------------

def test_local_svrg_has_no_noise_floor_unlike_local_sgd():
    fed = fed_quad(seed=28, n=4, d=4, atoms=12, hetero=1.5)
    assert fed.zeta_star_sq > 1e-3  # genuinely heterogeneous
    f_star = fed.average_value(fed.x_star)
    lbig = max(lp.smoothness_L for lp in fed.local_problems)
    eta = 1.0 / (10.0 * lbig)

    svrg_cfg = SolverConfig(variant="dp_svrg", eta=eta, gap_E=5, inner_m=30,
                            stages_S=60, batch=1, seed=4)
    x_svrg, _ = local_svrg(fed, svrg_cfg, f_star=f_star)
    svrg_gap = fed.average_value(x_svrg) - f_star
    assert svrg_gap <= 1e-10

    sgd_cfg = SolverConfig(variant="dp_sgd", eta=eta, gap_E=5, total_T=1800,
                           batch=1, seed=4)
    x_sgd, _ = local_sgd(fed, sgd_cfg, f_star=f_star)
    sgd_gap = fed.average_value(x_sgd) - f_star
    assert sgd_gap > 100 * max(svrg_gap, 1e-12)


@pytest.mark.parametrize("variant,cfg_kwargs", [
    ("dp_sgd", dict(total_T=60, gap_E=4)),
    ("dp_asvrg", dict(inner_m=12, stages_S=4, gap_E=4)),
])
def test_comm_rounds_equal_dp_projections_all_variants(variant, cfg_kwargs):
    from delayproj import dp_sgd, dp_asvrg

    fed = fed_quad(seed=33, n=3, d=3, atoms=8)
    lifted = lift_consensus(fed)
    cfg = SolverConfig(variant=variant, eta="auto", batch=1, seed=2, **cfg_kwargs)
    local_fn = {"dp_sgd": local_sgd, "dp_asvrg": local_asvrg}[variant]
    dp_fn = {"dp_sgd": dp_sgd, "dp_asvrg": dp_asvrg}[variant]
    _, local_trace = local_fn(fed, cfg)
    _, dp_trace = dp_fn(lifted, cfg)
    assert local_trace.comm_rounds[-1] == dp_trace.projections[-1]
