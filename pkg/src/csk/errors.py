"""Exception hierarchy.

Validation errors map to CLI exit code 2, numerical errors to exit code 3.
"""


class CskError(Exception):
    pass


class ValidationError(CskError):
    pass


class NumericalError(CskError):
    pass


class DomainError(ValidationError):
    pass


class PoleError(NumericalError):
    pass


class NonConvergence(NumericalError):
    pass


class ParameterDegeneracy(NumericalError):
    pass


class BracketError(NumericalError):
    pass


class MissedPoleError(NumericalError):
    pass


class DegeneratePole(NumericalError):
    pass


class BeyondFirstUnstableWindow(NumericalError):
    pass


class TruncationError(NumericalError):
    pass


class WindowError(ValidationError):
    pass


class DecayMismatch(ValidationError):
    pass


class SingularityError(NumericalError):
    pass


class QuadratureFailure(NumericalError):
    pass


class GridTooCoarse(ValidationError):
    pass


class TailUndeclared(ValidationError):
    pass


class NewtonDivergence(NumericalError):
    pass


class NonPositiveIterate(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class FrequencyPoleCollision(NumericalError):
    pass
