class ExtractorError(Exception):
    """Base error; the CLI maps subclasses to exit codes."""


class UsageError(ExtractorError):
    exit_code = 1


class DataError(ExtractorError):
    exit_code = 2
