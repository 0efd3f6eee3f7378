"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes (config 2, data 3, numeric 4).
"""


class AncerError(Exception):
    """Base class for all package errors."""


class ConfigError(AncerError, ValueError):
    """Invalid configuration or argument combination."""


class DataError(AncerError, ValueError):
    """Malformed or inconsistent input data."""


class ParseError(DataError):
    """A file could not be parsed; carries the offending line or byte offset."""

    def __init__(self, message, path=None, line=None, offset=None):
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if offset is not None:
            where.append(f"offset {offset}")
        prefix = ":".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.path = path
        self.line = line
        self.offset = offset


class FormatError(ParseError):
    """Wrong magic number / header for a known file format."""


class InputShapeError(DataError):
    """Vector or matrix dimension does not match what the model expects."""


class DomainError(AncerError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class SpecKindError(AncerError, ValueError):
    """A certifier was handed a smoothing distribution of the wrong kind."""


class NumericError(AncerError, ArithmeticError):
    """Non-finite values or a failed numerical routine."""


class StageError(AncerError):
    """Failure inside one stage of an experiment pipeline."""

    def __init__(self, stage, cause):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause
