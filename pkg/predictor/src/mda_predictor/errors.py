"""Exception taxonomy mirroring the exit-code classes of the CLI."""


class PredictorError(Exception):
    """Base class for everything raised deliberately by this package."""


class InvalidInputError(PredictorError):
    """Arguments violate a documented precondition."""


class ShapeError(PredictorError):
    """Tensor shapes do not match the declared layout."""


class DataError(PredictorError):
    """Dataset directory, manifest, or mode file is missing or malformed."""


class UsageError(PredictorError):
    """Bad command-line arguments or run-config keys."""
