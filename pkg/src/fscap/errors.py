"""Exception types shared across the package."""


class FscapError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatch(FscapError):
    pass


class InfeasibleParams(FscapError):
    pass


class NotIrreducible(FscapError):
    pass


class NonStochastic(FscapError):
    pass


class NotMixing(FscapError):
    pass


class NotPeriodic(FscapError):
    pass


class OutOfRange(FscapError):
    pass


class DegenerateKernel(FscapError):
    pass


class ZeroLikelihood(FscapError):
    pass


class SingularSystem(FscapError):
    pass


class TooShort(FscapError):
    pass


class TooLarge(FscapError):
    pass


class InvalidConfig(FscapError):
    pass


class ParseError(FscapError):
    pass


class InsufficientTrace(FscapError):
    pass


class MalformedTrace(FscapError):
    pass


class NonFiniteGradient(FscapError):
    pass
