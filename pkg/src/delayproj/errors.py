"""Exception types shared across the package."""


class DelayProjError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(DelayProjError):
    """Vector length does not match the expected dimension."""


class InfeasibleConstraint(DelayProjError):
    """The linear system A^T y = b has no solution."""


class DegenerateConstraint(DelayProjError):
    """rank(A) = p: the feasible set is the single point ``feasible_point``."""

    def __init__(self, message, feasible_point=None):
        super().__init__(message)
        self.feasible_point = feasible_point


class BadSpectrum(DelayProjError):
    """Invalid eigenvalue range for a generated quadratic."""


class InfeasibleRates(DelayProjError):
    """Network flow rates do not sum to zero."""


class DisconnectedGraph(DelayProjError):
    """The flow network graph is not connected."""


class MismatchedDims(DelayProjError):
    """Local problems of a federated instance disagree on shape."""


class NoConvergence(DelayProjError):
    """Reference solve did not reach the requested tolerance in budget."""


class InfeasiblePoint(DelayProjError):
    """A point expected to satisfy the constraint does not."""


class GapViolation(DelayProjError):
    """A custom projection index set exceeds the allowed gap."""


class StepTooLarge(DelayProjError):
    """Step size outside every admissible regime (eta * L > 1/2)."""


class NonFiniteIterate(DelayProjError):
    """A solver iterate became NaN or infinite."""


class DeltaOutOfRange(DelayProjError):
    """Momentum damping delta = 9(E^2-1) eta^2 L^2 is not in [0, 1)."""


class ThetaOutOfRange(DelayProjError):
    """Momentum coefficient theta is not in (2*delta, 1 + delta]."""


class DomainError(DelayProjError):
    """Argument outside the documented domain."""


class MonotonicityViolation(DelayProjError):
    """Trace counters decreased between rows (solver accounting bug)."""


class EmptySweep(DelayProjError):
    """Experiment config contains no solver sweep entries."""


class ConfigError(DelayProjError):
    """Experiment config file is malformed."""
