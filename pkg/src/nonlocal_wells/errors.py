"""Exception hierarchy.

Two families: ``InvalidParameters`` for malformed inputs (the CLI maps these
to exit code 1) and ``DomainError`` for conditions reported by a solver or a
state construction on otherwise valid input (exit code 2).
"""


class InvalidParameters(ValueError):
    pass


class DomainError(Exception):
    pass


# well_solver
class NoBoundState(DomainError):
    pass


class RootBracketFailure(DomainError):
    pass


class ConvergenceFailure(DomainError):
    pass


class GridMismatch(DomainError):
    pass


class FitUnavailable(DomainError):
    pass


class AmbiguousSegment(DomainError):
    pass


# nonlocal_algebra
class InvalidKindForN(InvalidParameters):
    pass


class NotUnitary(InvalidParameters):
    pass


class NotPhaseOnly(InvalidParameters):
    pass


class LinearlyDependentInputs(DomainError):
    pass


class PhaseEquivalenceViolation(DomainError):
    def __init__(self, message, tuple_key=None, deviation=None):
        super().__init__(message)
        self.tuple_key = tuple_key
        self.deviation = deviation


# measurement
class EmptyWell(DomainError):
    pass


class ZeroProbabilityOutcome(DomainError):
    pass


class DimensionMismatch(DomainError):
    pass


# dicke
class InvalidWeight(InvalidParameters):
    pass


class EdgeState(DomainError):
    pass
