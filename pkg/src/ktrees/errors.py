"""Exception types shared across the package."""


class CapExceeded(RuntimeError):
    """An enumeration would exceed its configured size limit."""


class InfeasibleParameters(ValueError):
    """Parameters fall outside the range a construction or solver accepts."""


class FormatError(ValueError):
    """Malformed serialized input."""
