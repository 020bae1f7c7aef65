from enum import IntEnum


class ExitCode(IntEnum):
    OK = 0
    USAGE = 2
    VALIDATION = 3
    IO = 4


class CascadeError(Exception):
    """
    Base error of the toolkit. Like an HTTP exception carries a status code,
    every error carries the process exit code the CLI reports for it.

    Args:
        detail (str): Human readable description of the failure.
    """
    exit_code: ExitCode = ExitCode.VALIDATION

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class UsageError(CascadeError):
    exit_code = ExitCode.USAGE


class InvalidInputError(CascadeError):
    exit_code = ExitCode.VALIDATION


class ConfigurationError(InvalidInputError):
    pass


class StorageError(CascadeError):
    exit_code = ExitCode.IO
