"""Exception types shared across the package."""


class SucpaError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(SucpaError, ValueError):
    """Input data or arguments violate a documented precondition."""


class NumericError(SucpaError, ArithmeticError):
    """A computation left the range where its result can be trusted.

    Raised on overflow despite stabilization, bracket or eigen solver
    failure, and similar conditions that signal pathological data rather
    than a bug.
    """


class NoUsableStepError(SucpaError):
    """An orbit carries no increment large enough to be informative."""
