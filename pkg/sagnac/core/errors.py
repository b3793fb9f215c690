"""
Exception hierarchy shared by the services and the command line.

Every error carries the process exit code the CLI reports for it.
"""


class SagnacError(Exception):
    """Base class for simulator errors."""

    exit_code: int = 1

    def __init__(self, message: str, **context):
        super().__init__(message)
        self.message = message
        self.context = context


class ConfigValidationError(SagnacError):
    """A run configuration violates a type invariant."""

    exit_code = 1


class StateValidationError(SagnacError, ValueError):
    """A quantum state or operator is not physical (e.g. not normalized)."""

    exit_code = 1


class SchemaError(SagnacError):
    """A CSV input does not match the expected schema."""

    exit_code = 1

    def __init__(self, message: str, row: int | None = None, **context):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message, row=row, **context)
        self.row = row


class SolverError(SagnacError):
    """The pump balance solver did not converge."""

    exit_code = 2


class FitError(SagnacError):
    """A fringe fit failed or the scan cannot constrain the model."""

    exit_code = 2


class OutputError(SagnacError):
    """Reading or writing a result file failed."""

    exit_code = 3
