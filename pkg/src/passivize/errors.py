"""Exception hierarchy.

Two roots: :class:`ValidationError` for malformed input (a spec that violates
its invariants, a matrix that is not Hermitian, ...) and
:class:`ComputationError` for requests that are well formed but cannot be
carried out (a method precondition fails, a search does not converge, ...).
The CLI maps the first to exit code 2 and the second to exit code 3.
"""


class PassivizeError(Exception):
    pass


class ValidationError(PassivizeError, ValueError):
    pass


class ComputationError(PassivizeError, RuntimeError):
    pass


# operator layer
class NonHermitianInput(ValidationError):
    pass


class NonHermitianGenerator(NonHermitianInput):
    pass


class NonUnitaryInput(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class NegativeTime(ValidationError):
    pass


# system model
class UnsortedObservable(ValidationError):
    pass


class NotAProbabilityVector(ValidationError):
    pass


class SpectrumMismatch(ValidationError):
    pass


class InvalidPermutation(ValidationError):
    pass


class InvalidGrouping(ValidationError):
    pass


class DimensionTooLargeForEnumeration(ComputationError):
    pass


class NotAnInvolution(ComputationError):
    pass


class NotPassivizing(ComputationError):
    pass


class NotBivalent(ComputationError):
    pass


# speed limits
class DegenerateSpectrum(ComputationError):
    pass


class MethodPreconditionFailed(ComputationError):
    pass


class AlreadyPassive(ComputationError):
    """The initial state is already passive; no transformation is needed."""


class NestingViolation(ComputationError):
    pass


class UnclassifiedBlock(ComputationError):
    pass


# multipartite / battery
class TooLarge(ComputationError):
    pass


class BandwidthMismatch(ComputationError):
    pass


class FormulaMismatch(ComputationError):
    """Two algebraically equivalent formulas disagree; indicates a bug."""


# oracle
class DimensionTooLarge(ComputationError):
    pass


class NoConvergence(ComputationError):
    pass


# cli
class UnsupportedFormat(ValidationError):
    pass


class InvalidSpec(ValidationError):
    pass


class UnknownCommand(ValidationError):
    pass
