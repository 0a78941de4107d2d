"""Cavity-mediated EPR entanglement from a trapped, driven atom."""

from .errors import (
    PhysicsDomainError,
    RegimeError,
    RegimeWarning,
    StepSizeError,
    TruncationError,
)

__version__ = "0.1.0"

__all__ = [
    "PhysicsDomainError",
    "RegimeError",
    "RegimeWarning",
    "StepSizeError",
    "TruncationError",
    "__version__",
]
