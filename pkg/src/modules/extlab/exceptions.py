"""Exceptions for extlab module."""

from src.infrastructure.errors import ExitCode, LabError


class ExtensionError(LabError):
    """Base exception for extension errors."""

    def __init__(self, detail: str = "Extension error", exit_code: int = ExitCode.INVARIANT_FAILURE):
        super().__init__(exit_code=exit_code, detail=detail)


class NoComplementError(ExtensionError):
    """Exception raised when there are no complement cells to extend from."""

    def __init__(self):
        super().__init__("The complement of the inclusions is empty; nothing to extend")


class InvalidExponentError(ExtensionError):
    """Exception raised for integrability exponents outside [1, 2]."""

    def __init__(self, p: float):
        super().__init__(f"Exponent p={p} must lie in [1, 2]", exit_code=ExitCode.CONFIG_ERROR)
