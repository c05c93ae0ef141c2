"""Exception hierarchy shared by the simulator modules."""


class DispCompError(Exception):
    """Base class for all package errors."""


class ConfigurationError(DispCompError, ValueError):
    """Invalid configuration value or key."""

    def __init__(self, message, key_path=None):
        self.key_path = key_path
        if key_path:
            message = f"{key_path}: {message}"
        super().__init__(message)


class TruncationError(DispCompError):
    """A pulse is not contained by its time grid."""


class NumericalError(DispCompError):
    """Non-finite values appeared in a computation."""


class EstimationError(DispCompError):
    """A dip metric or dispersion estimate could not be extracted."""


class DomainError(EstimationError, ValueError):
    """An input lies outside the domain of an inversion formula."""
