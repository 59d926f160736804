"""Exception hierarchy shared by every module."""


class SisError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(SisError, ValueError):
    """A model or matrix failed validation. ``field`` names the culprit."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class NegativeEntry(ValidationError):
    pass


class NotIrreducible(ValidationError):
    pass


class NonpositiveRate(ValidationError):
    pass


class NonpositiveWeight(ValidationError):
    pass


class NotMetzler(ValidationError):
    pass


class OutOfDomain(SisError, ValueError):
    pass


class NoConvergence(SisError, ArithmeticError):
    pass


class PreconditionViolated(SisError):
    pass


class MonotonicityViolation(SisError, AssertionError):
    pass


class NotEquilibrium(SisError):
    pass


class DomainEscape(SisError):
    pass
