"""Exceptions for dporosity module."""

from src.infrastructure.errors import ExitCode, LabError


class DPorosityError(LabError):
    """Base exception for two-scale problem errors."""

    def __init__(self, detail: str = "Double-porosity problem error", exit_code: int = ExitCode.INVARIANT_FAILURE):
        super().__init__(exit_code=exit_code, detail=detail)


class UnderResolvedError(DPorosityError):
    """Exception raised when scaled inclusions span too few grid cells."""

    def __init__(self, cells_per_diameter: float, minimum: float):
        self.cells_per_diameter = cells_per_diameter
        super().__init__(
            f"Smallest inclusion spans {cells_per_diameter:.2f} cells, at least {minimum:g} are required"
        )


class InvalidHomogenizedDataError(DPorosityError):
    """Exception raised when the cell data cannot define a homogenized problem."""

    def __init__(self, message: str):
        super().__init__(message)


class InsufficientSweepError(DPorosityError):
    """Exception raised when a diagnostic needs more eps values."""

    def __init__(self, found: int, needed: int = 3):
        super().__init__(f"At least {needed} eps values are required, found {found}", exit_code=ExitCode.CONFIG_ERROR)


class UnderResolutionWarning(UserWarning):
    """Scaled inclusions are resolved by fewer cells than recommended."""


class SweepMismatchError(DPorosityError):
    """Exception raised when sweep reports over different eps lists are combined."""

    def __init__(self, message: str):
        super().__init__(message, exit_code=ExitCode.CONFIG_ERROR)
