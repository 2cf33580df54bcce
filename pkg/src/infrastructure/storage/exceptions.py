"""Exceptions for storage infrastructure."""

from src.infrastructure.errors import ExitCode, LabError


class StorageError(LabError):
    """Base exception for reading or writing artifacts."""

    def __init__(self, detail: str = "Storage error"):
        super().__init__(exit_code=ExitCode.CONFIG_ERROR, detail=detail)


class CorruptFileError(StorageError):
    """Exception raised when a binary artifact has a bad header or payload."""

    def __init__(self, reason: str):
        super().__init__(f"Corrupt artifact: {reason}")
