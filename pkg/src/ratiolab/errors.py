"""Exception hierarchy shared by every module."""


class RatioLabError(Exception):
    """Base class for all library errors."""


class PoleError(RatioLabError, ZeroDivisionError):
    """Evaluation at (or numerically on top of) a pole."""


class DomainError(RatioLabError, ValueError):
    """Argument outside the supported domain."""


class ConvergenceError(RatioLabError, ArithmeticError):
    """A series, product or quadrature did not reach the requested tolerance."""


class CoverageError(RatioLabError, ValueError):
    """Eigenvalue data does not cover the primes a sum needs."""


class DataError(RatioLabError, ValueError):
    """Malformed or invariant-violating family data."""


class NotFoundError(RatioLabError, LookupError):
    """Remote source has no record for the requested space."""


class NetworkError(RatioLabError, OSError):
    """Remote fetch failed and no cached copy exists."""
