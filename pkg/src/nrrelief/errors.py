"""Exception types shared across the package."""


class HiaError(Exception):
    """Runtime failure while assessing importance (CLI exit code 1)."""


class ValidationError(HiaError, ValueError):
    """Invalid input: bad space, dataset row, flag or query (CLI exit code 2)."""


class EmptySliceError(HiaError):
    """A conditional slice matched no records."""
