"""Exception types shared across the package."""


class GmklError(Exception):
    """Base class for every error raised by this package."""


class UsageError(GmklError):
    """Bad arguments: dimension mismatch, invalid id, out-of-range option."""


class InputError(GmklError):
    """Unreadable or malformed input data (corpus or dataset files)."""


class FormatError(GmklError):
    """Malformed model file: bad magic, version, truncation, or checksum."""


class TrainingError(GmklError):
    """Numerical failure during optimization (non-finite loss or gradient)."""


class EvaluationError(GmklError):
    """Evaluation cannot produce a well-defined result."""
