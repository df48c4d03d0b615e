"""Exception taxonomy shared across the package.

The CLI maps these onto process exit codes: UsageError -> 1,
DataError -> 2, NumericError -> 3.
"""


class V2CError(Exception):
    """Base class for all errors raised by this package."""


class UsageError(V2CError):
    """A caller violated an API or CLI contract (bad shapes, bad flags)."""

    exit_code = 1


class DataError(V2CError):
    """An input file or dataset is malformed or inconsistent."""

    exit_code = 2


class NumericError(V2CError):
    """A numeric invariant broke at runtime (non-finite loss or params)."""

    exit_code = 3
