"""Exception hierarchy shared by all modules.

Numerical failures derive from :class:`NumericalError` so the command-line
front end can map them to a single exit status.
"""

from __future__ import annotations


class NumericalError(ArithmeticError):
    """Base class for failures of a numerical procedure."""


class DomainError(NumericalError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class SingularMetricError(NumericalError):
    """The metric coefficients vanish (1 + alpha*y = 0 or 1 + beta*x + gamma*y = 0)."""


class IntegrationError(NumericalError):
    """The ODE integrator could not complete.

    :arg partial: the trajectory computed up to the failure, when available
    """

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class NotFoundError(NumericalError):
    """A requested section hit, root or bracket does not exist within the search budget."""


class DegenerateError(NumericalError):
    """The input is a degenerate configuration for which the quantity is undefined."""


class ConfigError(ValueError):
    """Invalid run configuration (command-line flags or JSON file)."""
