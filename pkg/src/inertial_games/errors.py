"""Exception hierarchy.

Configuration-type problems derive from ``ValueError`` (CLI exit code 2);
numerical failures derive from ``ArithmeticError`` (CLI exit code 3).
"""


class ConfigError(ValueError):
    """Invalid user-supplied parameters or configuration."""


class DomainError(ConfigError):
    """An argument lies outside the domain of the operation."""


class LengthError(ConfigError):
    """Sequence lengths are inconsistent with the request."""


class InvalidSpecError(ConfigError):
    """A learning specification induces an invalid posterior schedule."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class NumericalError(ArithmeticError):
    """A numerical procedure failed."""


class InfeasibleDesignError(NumericalError):
    pass


class RealizationError(NumericalError):
    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class DesignVerificationError(NumericalError):
    pass


class UnconvergedError(NumericalError):
    """Raised when a converged limit is required but was not reached."""
