"""Exceptions for verify module."""

from src.infrastructure.errors import ExitCode, LabError


class AcceptanceError(LabError):
    """Exception raised when at least one acceptance check fails."""

    def __init__(self, failed: list[str]):
        self.failed = failed
        super().__init__(
            exit_code=ExitCode.ACCEPTANCE_FAILURE,
            detail=f"{len(failed)} acceptance check(s) failed: {', '.join(failed)}",
        )


class UnknownCheckError(LabError):
    """Exception raised when a requested check does not exist."""

    def __init__(self, name: str):
        super().__init__(exit_code=ExitCode.CONFIG_ERROR, detail=f"Unknown acceptance check {name!r}")
