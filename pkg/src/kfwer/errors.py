"""Exception types shared across the package.

The CLI maps these onto its exit-code contract: configuration and input
problems exit 2, numerical failures exit 3.
"""


class KfwerError(Exception):
    """Base class for all package errors."""


class DomainError(KfwerError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigurationError(KfwerError):
    """Inconsistent or out-of-contract configuration (sizes, ranges, files)."""


class ScaleError(ConfigurationError):
    """A request exceeds the size cap an operation is designed for."""


class NumericalError(KfwerError):
    """Base class for numerical failures."""


class BracketingError(NumericalError):
    """Root finding was given an interval that does not bracket a sign change."""


class ConvergenceError(NumericalError):
    """An iterative scheme did not converge within its refinement budget."""

    def __init__(self, message, last_estimates=None):
        super().__init__(message)
        self.last_estimates = last_estimates
