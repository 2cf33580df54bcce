"""Exceptions for stochastic module."""

from src.infrastructure.errors import ExitCode, LabError


class EnsembleError(LabError):
    """Base exception for ensemble errors."""

    def __init__(self, detail: str = "Ensemble error", exit_code: int = ExitCode.INVARIANT_FAILURE):
        super().__init__(exit_code=exit_code, detail=detail)


class DuplicateSeedError(EnsembleError):
    """Exception raised when two realizations would share a seed."""

    def __init__(self, seeds: list[int]):
        self.seeds = seeds
        super().__init__(f"Realization seeds must be pairwise distinct, repeated: {seeds}", exit_code=ExitCode.CONFIG_ERROR)


class ModelInfeasibleError(EnsembleError):
    """Exception raised when too many realizations are rejected."""

    def __init__(self, rejected: int, attempts: int):
        self.rejected = rejected
        self.attempts = attempts
        super().__init__(f"{rejected} of {attempts} realizations rejected; the model parameters are infeasible")


class InsufficientPeriodsError(EnsembleError):
    """Exception raised when an ergodic check gets fewer than two cell periods."""

    def __init__(self, found: int):
        super().__init__(f"At least two cell periods are required, found {found}", exit_code=ExitCode.CONFIG_ERROR)
