"""
Exception hierarchy. Every error carries a short category string that the
CLI prints as `error: <category>: <message>` and maps to an exit status.
"""
from typing import Iterable, Optional


class GenFLError(Exception):
    """Base class for simulator errors"""
    category = "internal"
    exit_code = 1


class ConfigError(GenFLError, ValueError):
    """Config file could not be parsed or failed validation"""
    category = "config"
    exit_code = 2

    def __init__(self, message: str, line: Optional[int] = None, keys: Iterable[str] = ()):
        self.line = line
        self.keys = list(keys)
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ShapeMismatchError(GenFLError, ValueError):
    category = "shape"
    exit_code = 3


class EmptyDatasetError(GenFLError, ValueError):
    category = "empty-data"
    exit_code = 3


class PartitionError(GenFLError, ValueError):
    category = "partition"
    exit_code = 3


class NumericalError(GenFLError, ArithmeticError):
    category = "numeric"
    exit_code = 4


class RoundError(GenFLError):
    """A round failed; the server state from before the round is kept"""
    category = "round"
    exit_code = 5

    def __init__(self, round_index: int, prior_state, cause: BaseException):
        self.round_index = round_index
        self.prior_state = prior_state
        self.cause = cause
        super().__init__(f"round {round_index} failed: {type(cause).__name__}: {cause}")


class SweepError(GenFLError, ValueError):
    category = "sweep"
    exit_code = 2


class MetricsFormatError(GenFLError, ValueError):
    """A metrics file that was not written by this tool"""
    category = "io"
    exit_code = 1
