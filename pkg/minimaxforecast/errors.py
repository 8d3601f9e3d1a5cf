"""Exceptions raised by minimaxforecast.

Every exception derives from :class:`ForecastError` and from the builtin it
most closely resembles, so callers can catch either.
"""


class ForecastError(Exception):
    """Base class for all minimaxforecast errors."""

    pass


class DimensionError(ForecastError, ValueError):
    """Raised when vector or table shapes disagree."""

    pass


class ArgumentError(ForecastError, ValueError):
    """Raised when an argument is outside the operation's domain."""

    pass


class CapacityError(ForecastError, ValueError):
    """Raised when an exhaustive enumeration would exceed its horizon cap."""

    def __init__(self, what: str, requested: int, limit: int):
        super().__init__(f"{what}: horizon {requested} exceeds the enumeration cap of {limit}")
        self.requested = requested
        self.limit = limit


class InvariantViolation(ForecastError, AssertionError):
    """Raised when a checked invariant does not hold."""

    pass


class ProtocolViolation(InvariantViolation):
    """Raised when a player breaks the rules of the game protocol."""

    pass


class NumericError(ForecastError, ArithmeticError):
    """Raised when an iterative numerical routine fails to converge."""

    def __init__(self, message: str, iterations: int):
        super().__init__(f"{message} (after {iterations} iterations)")
        self.iterations = iterations


class ErmFailure(ForecastError, RuntimeError):
    """Raised when an ERM oracle fails while a forecaster is predicting."""

    def __init__(self, round_index: int, cause: BaseException):
        super().__init__(f"ERM oracle failed in round {round_index}: {cause}")
        self.round_index = round_index
        self.__cause__ = cause


class ConfigError(ForecastError, ValueError):
    """Raised for an invalid experiment configuration."""

    def __init__(self, message: str, line: int | None = None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
        self.line = line


__all__ = [
    "ArgumentError",
    "CapacityError",
    "ConfigError",
    "DimensionError",
    "ErmFailure",
    "ForecastError",
    "InvariantViolation",
    "NumericError",
    "ProtocolViolation",
]
