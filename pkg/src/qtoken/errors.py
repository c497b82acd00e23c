"""Exception hierarchy shared by all modules."""


class QTokenError(Exception):
    """Base class for toolkit errors."""


class DomainError(QTokenError, ValueError):
    """An argument lies outside the domain of an operation."""


class ConfigError(QTokenError, ValueError):
    """A scenario configuration is malformed or inconsistent."""


class NumericalFailure(QTokenError, ArithmeticError):
    """A quadrature or solver did not reach its tolerance."""


class DegenerateBranch(NumericalFailure):
    """A measurement branch has vanishing probability and cannot be normalized."""


class OptimizationFailure(NumericalFailure):
    """No feasible design was found; ``best`` holds the best point seen."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
