"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Every criterion runs at its stated tolerance through the corresponding
verification check (the checks carry their own independent oracles:
pseudoinverse projectors, explicit constraint matrices, literal
finite-sum enumeration, textbook update-rule transcriptions).
"""

import time

from delayproj import verify


def _run(number, title, check, budget_s):
    t0 = time.time()
    ok, detail = check()
    elapsed = time.time() - t0
    status = "PASS" if ok else "FAIL"
    print(f"[{status}] criterion {number} ({title}): {detail} [{elapsed:.1f}s]")
    assert ok, f"criterion {number} ({title}): {detail}"
    assert elapsed < budget_s, f"criterion {number} exceeded {budget_s}s ({elapsed:.1f}s)"


def test_criterion_01_projector_algebra():
    _run(1, "projector algebra", verify.check_projector_algebra, 5)


def test_criterion_02_consensus_equivalence():
    _run(2, "consensus equivalence", verify.check_consensus_equivalence, 1)


def test_criterion_03_lifted_variance_identities():
    _run(3, "lifted variance identities", verify.check_lifted_variance_identities, 10)


def test_criterion_04_theta_sequence():
    _run(4, "theta sequence", verify.check_theta_sequence, 1)


def test_criterion_05_reductions():
    _run(5, "reductions to textbook methods", verify.check_reductions, 10)


def test_criterion_06_lifted_equivalence():
    _run(6, "lifted equivalence with negative control",
         verify.check_lifted_equivalence, 30)


def test_criterion_07_noise_floor_separation():
    _run(7, "variance reduction removes the noise floor",
         verify.check_noise_floor_separation, 180)


def test_criterion_08_svrg_linear_convergence():
    _run(8, "per-stage linear convergence", verify.check_svrg_linear_convergence, 60)


def test_criterion_09_projection_efficiency_trend():
    _run(9, "projection-efficiency trend", verify.check_projection_efficiency_trend,
         180)


def test_criterion_10_restart_halving():
    _run(10, "restart halving", verify.check_restart_halving, 120)


def test_criterion_11_acceleration_ordering():
    _run(11, "acceleration ordering", verify.check_acceleration_ordering, 180)


def test_criterion_12_control_variate_unbiasedness():
    _run(12, "projected control-variate unbiasedness",
         verify.check_control_variate_unbiasedness, 5)
