"""Exception taxonomy shared across the package."""


class IfsLabError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(IfsLabError):
    """Argument violates a documented constraint."""


class SpaceMismatchError(IfsLabError):
    """Point, map, or ball does not belong to the expected space."""


class OutOfRangeError(IfsLabError):
    """Index or length outside the valid range."""


class TooLargeError(IfsLabError):
    """Requested object exceeds a hard size cap."""


class TooFineError(IfsLabError):
    """Requested resolution would materialize too many net nodes."""


class UnsupportedError(IfsLabError):
    """Operation not defined for this space or map kind."""


class ConfigError(IfsLabError):
    """Config text rejected; carries a 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
