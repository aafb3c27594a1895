"""Exception hierarchy shared across the package.

The four categories map one-to-one onto CLI exit codes, so every failure
a command can hit is classifiable without string matching.
"""


class ResbmError(Exception):
    """Base class for all package errors."""


class ValidationError(ResbmError):
    """Malformed input data or parameters."""


class EstimationError(ResbmError):
    """An estimator failed to produce a usable fit."""


class InferenceError(ResbmError):
    """A hypothesis-testing procedure could not be carried out."""


class IOFormatError(ResbmError):
    """A file could not be read or written in the expected format."""
