"""Exceptions for cell module."""

from src.infrastructure.errors import ExitCode, LabError


class CellError(LabError):
    """Base exception for cell-problem errors."""

    def __init__(self, detail: str = "Cell problem error", exit_code: int = ExitCode.INVARIANT_FAILURE):
        super().__init__(exit_code=exit_code, detail=detail)


class InvariantViolationError(CellError):
    """Exception raised when a computed quantity breaks an identity it must satisfy."""

    def __init__(self, quantity: str, value: float, limit: float):
        self.quantity = quantity
        self.value = value
        self.limit = limit
        super().__init__(f"{quantity} = {value:.3e} exceeds {limit:.3e}")


class ConsistencyError(InvariantViolationError):
    """Exception raised when the energy and flux forms of the homogenized matrix disagree."""

    def __init__(self, value: float, limit: float):
        super().__init__("relative energy/flux disagreement of a_bar", value, limit)


class MissingDirectionError(CellError):
    """Exception raised when an operation needs correctors for every direction."""

    def __init__(self, found: list[int], dim: int):
        super().__init__(f"Correctors for all {dim} directions required, found {sorted(found)}")


class IncommensurateGridError(CellError):
    """Exception raised when a domain is not an integer number of scaled cells."""

    def __init__(self, message: str):
        super().__init__(message, exit_code=ExitCode.CONFIG_ERROR)
