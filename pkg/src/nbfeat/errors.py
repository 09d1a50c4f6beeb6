"""Exception types shared across the package."""


class NbfeatError(Exception):
    """Base class for all package errors."""


class GraphFormatError(NbfeatError, ValueError):
    """Malformed edge-list or spike file."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SelfLoopError(NbfeatError, ValueError):
    pass


class VertexRangeError(NbfeatError, IndexError):
    pass


class ValidationError(NbfeatError, ValueError):
    pass


class UnknownParameterError(NbfeatError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unknown parameter"


class NumericalError(NbfeatError, RuntimeError):
    """Eigensolver, power iteration or SMO failed to converge."""
