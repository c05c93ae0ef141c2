"""Dispersion pre-compensation and HOM-based side selection for asymmetric MDI-QKD links."""

from .errors import (
    ConfigurationError,
    DispCompError,
    DomainError,
    EstimationError,
    NumericalError,
    TruncationError,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "DispCompError",
    "DomainError",
    "EstimationError",
    "NumericalError",
    "TruncationError",
]
