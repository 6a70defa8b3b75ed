"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Raised when inputs violate a documented precondition."""


class CapExceededError(RuntimeError):
    """Raised when a computation would exceed a configured size cap."""
