"""Exception types shared across the package."""


class ChanestError(Exception):
    """Base class for all package errors."""


class ShapeError(ChanestError, ValueError):
    """Operand shapes are incompatible."""

    def __init__(self, message, *shapes):
        if shapes:
            message = f"{message}: " + " vs ".join(str(tuple(s)) for s in shapes)
        super().__init__(message)
        self.shapes = tuple(tuple(s) for s in shapes)


class ParameterError(ChanestError, ValueError):
    """An argument is outside its valid domain."""


class UsageError(ChanestError, RuntimeError):
    """An API was called in a state where it cannot operate."""


class FramingError(ChanestError, ValueError):
    """A sample stream does not have the length an OFDM frame requires."""


class UnsupportedPatternError(ChanestError, ValueError):
    """A pilot pattern cannot be handled by the requested estimator."""


class NumericalError(ChanestError, ArithmeticError):
    """A computation produced a singular system or non-finite values."""


class ConfigError(ChanestError, ValueError):
    """A run configuration is malformed or references unknown keys."""


class ArtifactError(ChanestError, OSError):
    """A required file is missing or has an unexpected layout."""
