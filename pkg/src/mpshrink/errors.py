"""Exception types shared across the package."""


class MpshrinkError(Exception):
    """Base class for all package errors."""


class DataFormatError(MpshrinkError, ValueError):
    """Malformed dataset text. Carries the 1-based line number when known."""

    def __init__(self, message, line_no=None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class ModelFormatError(MpshrinkError, ValueError):
    """Malformed model file."""


class ConfigError(MpshrinkError, ValueError):
    """Invalid hyperparameters, dimensions, or operation preconditions."""


class ConvergenceError(MpshrinkError, RuntimeError):
    """An iterative procedure failed to reach its target within its budget."""
