"""Exception hierarchy.

Each class carries a short ``category`` string that the CLI reports in its
machine-readable error payload and maps to a distinct exit code.
"""


class MSCGARCHError(Exception):
    category = "error"
    exit_code = 1


class InvalidSpecError(MSCGARCHError, ValueError):
    """A model, prior or configuration violates its invariants."""

    category = "invalid_spec"
    exit_code = 2


class DataError(MSCGARCHError, ValueError):
    """Malformed or non-finite input data."""

    category = "data"
    exit_code = 3


class NumericalError(MSCGARCHError, ArithmeticError):
    """A computation produced an impossible numerical state.

    ``index`` is the time (or iteration) index at which it happened, when known.
    """

    category = "numerical"
    exit_code = 4

    def __init__(self, message: str, index: int | None = None):
        if index is not None:
            message = f"{message} (index {index})"
        super().__init__(message)
        self.index = index


class ConvergenceError(NumericalError):
    category = "convergence"
    exit_code = 5


class InputFileError(MSCGARCHError, FileNotFoundError):
    category = "missing_file"
    exit_code = 6


class MalformedJSONError(InvalidSpecError):
    category = "malformed_json"
    exit_code = 7
