"""Exception taxonomy for the comd package.

Every error raised by the library derives from ComdError so callers can
catch the whole family; the CLI maps subtypes onto exit codes.
"""


class ComdError(Exception):
    """Base class for all comd errors."""


class InvalidInputError(ComdError):
    """Structurally bad input: wrong shapes, lengths, or invalid values."""


class DegenerateInputError(ComdError):
    """Input is valid but carries no usable information (e.g. zero energy)."""


class InvalidRecipeError(ComdError):
    """A synthesis recipe violates its constraints (e.g. component above Nyquist)."""


class SchemaError(ComdError):
    """A trace file is missing a required column."""


class TraceParseError(ComdError):
    """A trace file has a malformed cell or ragged row."""


class FormatError(ComdError):
    """A mode file or config file does not match the expected format/version."""


class DegenerateModesError(ComdError):
    """Mode system is rank deficient; orthogonalization is not defined."""


class UsageError(ComdError):
    """Bad command-line arguments or configuration keys."""


class ConvergenceError(ComdError):
    """An iteration failed to converge within its budget.

    Carries the final off-diagonal deviation and the iteration count so
    callers can report diagnostics.
    """

    def __init__(self, message, final_offdiag=None, iterations=None):
        super().__init__(message)
        self.final_offdiag = final_offdiag
        self.iterations = iterations
