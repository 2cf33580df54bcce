"""Exceptions for geometry module."""

from src.infrastructure.errors import ExitCode, LabError


class GeometryError(LabError):
    """Base exception for geometry-related errors."""

    def __init__(self, detail: str = "Geometry error", exit_code: int = ExitCode.INVARIANT_FAILURE):
        super().__init__(exit_code=exit_code, detail=detail)


class InvalidGeometryParameterError(GeometryError):
    """Exception raised when sampler parameters violate their preconditions."""

    def __init__(self, message: str):
        super().__init__(message, exit_code=ExitCode.CONFIG_ERROR)


class GeometryOverlapError(GeometryError):
    """Exception raised when inclusions overlap or do not fit in the cell."""

    def __init__(self, message: str = "Inclusions overlap"):
        super().__init__(message)


class ConnectivityError(GeometryError):
    """Exception raised when the complement of F is not a single connected component."""

    def __init__(self, component_count: int):
        self.component_count = component_count
        super().__init__(f"Complement of the inclusions has {component_count} connected components")


class FullCoverageError(GeometryError):
    """Exception raised when the inclusions cover the whole cell."""

    def __init__(self):
        super().__init__("Inclusions cover every cell; the volume fraction must stay below 1")


class ResampleRequired(GeometryError):
    """Exception raised when a random sample is rejected and must be redrawn."""

    def __init__(self, reason: str):
        super().__init__(f"Sample rejected: {reason}")


class InsufficientInclusionsError(GeometryError):
    """Exception raised when an operation needs more inclusions than available."""

    def __init__(self, found: int, needed: int = 2):
        super().__init__(f"At least {needed} inclusions are required, found {found}")


class UnsupportedShapePairError(GeometryError):
    """Exception raised for shape pairs without an exact distance predicate."""

    def __init__(self, first: str, second: str):
        super().__init__(f"No distance predicate between {first} and {second}")


class SaturationWarning(UserWarning):
    """Sequential adsorption stopped before reaching its target count."""


class PercolationThresholdWarning(UserWarning):
    """Black-square probability at or above the critical value."""
