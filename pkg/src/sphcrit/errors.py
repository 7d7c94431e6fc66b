"""Exception types shared across the package."""


class SphCritError(Exception):
    """Base class."""


class DomainError(SphCritError, ValueError):
    """Argument outside the documented domain of an operation."""


class NumericError(SphCritError, ArithmeticError):
    """A computation failed a numerical health check."""


class QuadratureError(NumericError):
    """Quadrature did not reach the requested tolerance.

    The best available estimate is attached as ``estimate``.
    """

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error
