"""Exception types shared across the package."""


class PhysicsDomainError(ValueError):
    """A physical precondition is violated (bad parameter, wrong regime, ...)."""


class RegimeError(PhysicsDomainError):
    """Couplings lie outside the regime where a closed-form solution exists."""


class TruncationError(PhysicsDomainError):
    """The truncated Fock space is too small for the requested dynamics."""


class StepSizeError(RuntimeError):
    """Step halving in the integrator went below the minimum step."""


class RegimeWarning(UserWarning):
    """Emitted when couplings are computed but fall outside the periodic regime."""
