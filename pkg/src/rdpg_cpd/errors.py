"""Exception hierarchy shared across the package."""


class RdpgCpdError(Exception):
    """Base class for all package errors."""


class InvalidInputError(RdpgCpdError, ValueError):
    pass


class InvalidDimensionError(InvalidInputError):
    pass


class InvalidIntervalError(InvalidInputError):
    pass


class ModelViolationError(RdpgCpdError, ValueError):
    """A generated latent configuration produced an edge probability outside [0, 1]."""


class FormatError(RdpgCpdError, ValueError):
    """Malformed series file. ``position`` is a byte offset or 1-based line number."""

    def __init__(self, message, position=None):
        if position is not None:
            message = f"{message} (at {position})"
        super().__init__(message)
        self.position = position


class ResourceLimitError(RdpgCpdError):
    pass
