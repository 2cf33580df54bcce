"""Exceptions for mesh module."""

from src.infrastructure.errors import ExitCode, LabError


class MeshError(LabError):
    """Base exception for discretization errors."""

    def __init__(self, detail: str = "Discretization error"):
        super().__init__(exit_code=ExitCode.INVARIANT_FAILURE, detail=detail)


class InvalidCoefficientError(MeshError):
    """Exception raised when a coefficient or mass is out of range."""

    def __init__(self, message: str = "Coefficients must be nonnegative and outside > 0"):
        super().__init__(message)


class GridMismatchError(MeshError):
    """Exception raised when fields live on incompatible grids."""

    def __init__(self, message: str = "Grid sizes do not match"):
        super().__init__(message)


class EmptyMaskWarning(UserWarning):
    """A norm was requested over an empty cell set."""
