"""Exception types shared across the package."""

from __future__ import annotations


class DataError(ValueError):
    """Malformed or inconsistent input data.

    Carries an optional source path and 1-based line number so CLI error
    messages can point at the offending record.
    """

    def __init__(self, message: str, *, path=None, line: int | None = None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None and line is not None:
            prefix = f"{path}:{line}: "
        elif path is not None:
            prefix = f"{path}: "
        elif line is not None:
            prefix = f"line {line}: "
        super().__init__(prefix + message)


class ConvergenceError(RuntimeError):
    """A solver exhausted its iteration budget before reaching tolerance.

    ``best`` holds the best iterate found so far (model-specific payload),
    so callers can decide whether to use it anyway.
    """

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


class CorruptModelError(ValueError):
    """A model file could not be parsed or fails structural validation."""


class ModelVersionError(ValueError):
    """A model file declares a format version this code does not support."""
