"""Base error type shared by every feature module.

Each feature declares its own hierarchy in ``exceptions.py`` on top of `LabError`; the
CLI entry point turns the carried ``exit_code`` into the process exit status.
"""


class ExitCode:
    """Process exit codes of the command-line surface."""
    OK = 0
    ACCEPTANCE_FAILURE = 1
    CONFIG_ERROR = 2
    INVARIANT_FAILURE = 3


class LabError(Exception):
    """Base exception carrying a process exit code and a readable detail."""

    def __init__(self, exit_code: int = ExitCode.INVARIANT_FAILURE, detail: str = "Internal error"):
        super().__init__(detail)
        self.exit_code = exit_code
        self.detail = detail

    def __str__(self) -> str:
        return self.detail
