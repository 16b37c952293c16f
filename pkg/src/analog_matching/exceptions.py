"""Exception types raised by the analog matching library."""


class AnalogMatchingError(Exception):
    """Base class for all library errors."""


class DomainError(AnalogMatchingError, ValueError):
    """An input lies outside the domain where an operation is defined."""


class SolverError(AnalogMatchingError, RuntimeError):
    """A numerical solver did not converge."""


class ContractError(AnalogMatchingError, RuntimeError):
    """Encoder/decoder state was used in a way the codec does not allow."""


class ConfigError(AnalogMatchingError, ValueError):
    """Configuration file is missing, malformed or inconsistent."""

    def __init__(self, message: str, path: str | None = None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)
