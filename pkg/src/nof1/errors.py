"""Exception types shared across the package."""


class Nof1Error(Exception):
    """Base class for all package errors."""


class DimensionError(Nof1Error, ValueError):
    """Signals or matrices have incompatible shapes."""


class DomainError(Nof1Error, ValueError):
    """A parameter lies outside the range an operation supports."""


class PreconditionError(Nof1Error, ValueError):
    """An input violates a documented precondition."""


class ConfigurationError(Nof1Error, ValueError):
    """An experiment or CLI configuration is invalid.

    ``field`` holds the dotted path of the offending entry when known.
    """

    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field


class RefusalError(Nof1Error, RuntimeError):
    """The request is well-formed but too large to perform safely."""
