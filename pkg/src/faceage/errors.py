"""Exception types shared across the pipeline, mapped to CLI exit codes."""


class FaceAgeError(Exception):
    """Base class for errors raised by this package."""


class UsageError(FaceAgeError):
    """Bad command-line arguments or parameter combinations (exit code 1)."""


class DataError(FaceAgeError):
    """Malformed or inconsistent input data (exit code 2)."""


class NumericalError(FaceAgeError):
    """A numerical procedure failed to converge or factorize (exit code 3)."""
