"""Exception hierarchy shared across the package.

The CLI maps these onto distinct exit codes (see ``kipasim.cli``).
"""


class KipasimError(Exception):
    """Base class for all package errors."""


class ValidationError(KipasimError):
    """Invalid input value, shape, or state."""


class ConfigurationError(ValidationError):
    """Inconsistent or incomplete run/pipeline configuration."""


class NumericalDomainError(KipasimError):
    """A numerical intermediate left its mathematically valid domain."""


class InstabilityError(KipasimError):
    """Pump parameters at or beyond the parametric oscillation threshold."""


class FitError(KipasimError):
    """Least-squares fit failed.

    Carries the last iterate in ``last_params`` when available.
    """

    def __init__(self, message, last_params=None):
        super().__init__(message)
        self.last_params = last_params


class UnderdeterminedError(FitError):
    """Too few data points to constrain the fit parameters."""
