"""Delayed-projection stochastic solvers for linearly constrained problems.

A library for minimizing convex finite sums subject to linear equality
constraints A^T x = b by calling the (possibly expensive) projection
onto the feasible subspace only once every few stochastic-gradient
steps, plus the consensus lifting under which Local SGD / SVRG / ASVRG
are the same solvers with synchronization playing the role of the
projection.
"""

from .errors import (
    BadSpectrum,
    ConfigError,
    DegenerateConstraint,
    DelayProjError,
    DeltaOutOfRange,
    DimensionMismatch,
    DisconnectedGraph,
    DomainError,
    EmptySweep,
    GapViolation,
    InfeasibleConstraint,
    InfeasiblePoint,
    InfeasibleRates,
    MismatchedDims,
    MonotonicityViolation,
    NoConvergence,
    NonFiniteIterate,
    StepTooLarge,
    ThetaOutOfRange,
)
from .federated import (
    CommLog,
    equivalence_harness,
    local_asvrg,
    local_sgd,
    local_svrg,
)
from .metrics import (
    CSV_HEADER,
    ComparisonRow,
    ComplexityCounters,
    RunTrace,
    complexity_to_eps,
    record,
)
from .problems import (
    FederatedInstance,
    LcpProblem,
    LocalProblem,
    empirical_gradient_lipschitz,
    estimate_smoothness,
    federated_heterogeneity,
    lcqp_from_atoms,
    lift_consensus,
    load_problem,
    logreg_from_data,
    make_constrained_logreg,
    make_federated_logreg,
    make_federated_quadratics,
    make_lcqp,
    make_network_flow,
    planted_spectrum_quadratic,
    save_problem,
    solve_reference,
    variance_at_optimum,
)
from .projection import (
    ConstraintSubspace,
    build_subspace,
    consensus_project,
    consensus_subspace,
    feasibility_residual,
    project_null,
    project_range,
)
from .solvers import (
    ProjectionSchedule,
    SolverConfig,
    ThetaState,
    default_step_size,
    dp_asvrg,
    dp_sgd,
    dp_svrg,
    make_schedule,
    restart_asvrg,
    theta_next,
)

__version__ = "0.1.0"
