"""Exceptions for linalg module."""

from src.infrastructure.errors import ExitCode, LabError


class SolverError(LabError):
    """Base exception for linear-solver errors."""

    def __init__(self, detail: str = "Linear solver failed"):
        super().__init__(exit_code=ExitCode.INVARIANT_FAILURE, detail=detail)


class NonConvergenceError(SolverError):
    """Exception raised when CG exceeds its iteration budget."""

    def __init__(self, iterations: int, residual_history: list[float]):
        self.iterations = iterations
        self.residual_history = residual_history
        last = residual_history[-1] if residual_history else float("nan")
        super().__init__(f"CG did not converge in {iterations} iterations (relative residual {last:.3e})")


class SingularSystemError(SolverError):
    """Exception raised when a dense system is singular to working precision."""

    def __init__(self, pivot: float | None = None):
        message = "Matrix is singular to working precision"
        if pivot is not None:
            message += f" (smallest pivot {pivot:.3e})"
        super().__init__(message)


class SystemTooLargeError(SolverError):
    """Exception raised when the dense oracle is asked for a large system."""

    def __init__(self, size: int, limit: int):
        super().__init__(f"Dense solve limited to {limit} unknowns, got {size}")


class CompatibilityWarning(UserWarning):
    """Right-hand side of a singular periodic solve had a nonzero mean."""
