"""Exception types shared across the package."""


class TwistgripError(Exception):
    """Base class for all package errors."""


class DomainError(TwistgripError, ValueError):
    """An input is outside the physical or mathematical domain of an operation."""


class ValidationError(TwistgripError, ValueError):
    """Structured data violates an invariant (non-monotone curve, bad range, ...)."""


class ParseError(TwistgripError, ValueError):
    """A file could not be parsed; message carries the offending line number."""


class FitError(TwistgripError, RuntimeError):
    """A fitting routine cannot produce a result from the given data."""
