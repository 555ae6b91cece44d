"""Trace recording, counter identities, and comparison-table tests."""

import io
import math

import numpy as np
import pytest

from delayproj import (
    CSV_HEADER,
    ComplexityCounters,
    MonotonicityViolation,
    RunTrace,
    SolverConfig,
    complexity_to_eps,
    dp_svrg,
    make_lcqp,
    record,
    solve_reference,
)


def test_record_appends_and_enforces_monotonicity():
    trace = RunTrace("t", "dp_sgd")
    c = ComplexityCounters(iterations_T=1, projections_P=1, gradients_G=2)
    record(trace, c, 0.5, 1e-12)
    assert len(trace) == 1
    worse = ComplexityCounters(iterations_T=0, projections_P=1, gradients_G=2)
    with pytest.raises(MonotonicityViolation):
        record(trace, worse, 0.4, 0.0)
    bad_p = ComplexityCounters(iterations_T=2, projections_P=0, gradients_G=2)
    with pytest.raises(MonotonicityViolation):
        record(trace, bad_p, 0.4, 0.0)


def test_many_appends_keep_counters_sorted():
    trace = RunTrace()
    for t in range(1000):
        c = ComplexityCounters(iterations_T=t, stages_S=t // 10,
                               projections_P=t // 3, gradients_G=2 * t)
        record(trace, c, 1.0 / (t + 1), 0.0)
    assert trace.iter == sorted(trace.iter)
    assert trace.projections == sorted(trace.projections)
    assert trace.gradients == sorted(trace.gradients)


def test_complexity_to_eps():
    trace = RunTrace("r")
    for t, sub in enumerate([1.0, 0.3, 0.1, 0.02, 0.02]):
        record(trace, ComplexityCounters(iterations_T=t, projections_P=t,
                                         gradients_G=3 * t), sub, 0.0)
    row = complexity_to_eps(trace, 1e9)
    assert row.reached and row.projections_to_eps == 0
    row = complexity_to_eps(trace, 0.1)
    assert row.reached and row.projections_to_eps == 2 and row.gradients_to_eps == 6
    row = complexity_to_eps(trace, 1e-9)
    assert not row.reached
    # relaxing eps never increases the projection count
    eps_grid = [1e-3, 0.05, 0.2, 0.5, 2.0]
    counts = [complexity_to_eps(trace, e).projections_to_eps for e in eps_grid]
    assert counts == sorted(counts, reverse=True)


def test_csv_round_trip_bitwise():
    trace = RunTrace("runX", "dp_svrg")
    rng = np.random.default_rng(0)
    for t in range(50):
        record(trace, ComplexityCounters(iterations_T=t, stages_S=t // 7,
                                         projections_P=t // 2, gradients_G=5 * t,
                                         comm_rounds=t // 3),
               float(rng.random() * 10.0 ** float(rng.integers(-12, 3))),
               float(rng.random() * 1e-10), wall_ns=t * 100)
    buf = io.StringIO(trace.to_csv_string())
    back = RunTrace.read_csv(buf)
    assert back.run_id == "runX" and back.variant == "dp_svrg"
    assert back.suboptimality == trace.suboptimality  # repr round trip is exact
    assert back.feasibility == trace.feasibility
    assert back.iter == trace.iter
    assert back.projections == trace.projections
    assert trace.to_csv_string().splitlines()[0] == ",".join(CSV_HEADER)


def test_table_identities_for_variance_reduced_run():
    prob = make_lcqp(seed=41, p=8, n_atoms=30, m_constraints=2,
                     eigen_floor=0.5, eigen_ceil=2.0)
    f_star = prob.value_oracle(solve_reference(prob))
    m, S, E, batch = 17, 4, 5, 3
    cfg = SolverConfig(variant="dp_svrg", eta="auto", gap_E=E, inner_m=m,
                       stages_S=S, batch=batch, seed=0)
    _, trace = dp_svrg(prob, cfg, f_star=f_star)
    assert trace.iter[-1] == m * S
    assert trace.gradients[-1] == (2 * m * batch + prob.n_atoms) * S
    assert trace.projections[-1] == S + math.ceil(m / E) * S
