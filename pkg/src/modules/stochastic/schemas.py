"""Stochastic schemas - per-realization results and ensemble aggregates."""

from typing import Literal

from pydantic import BaseModel, Field


class RealizationResult(BaseModel):
    """Cell quantities of one accepted realization."""
    seed: int
    attempts: int = Field(1, ge=1, description="Draws needed until the geometry was accepted")
    count: int = Field(..., ge=0, description="Inclusions in the cell")
    a_bar: list[list[float]]
    mean_v: float = Field(..., ge=0, le=1)
    vol_frac: float = Field(..., ge=0, lt=1)


class EnsembleReport(BaseModel):
    """Mean and standard error over realizations, reduced in seed order."""
    model: str
    realizations: int = Field(..., ge=1)
    copies: int = Field(1, ge=1)
    resolution: int
    seeds: list[int]
    rejections: int = Field(0, ge=0)
    a_bar_mean: list[list[float]]
    a_bar_stderr: list[list[float]]
    mean_v_mean: float
    mean_v_stderr: float = Field(..., ge=0)
    vol_frac_mean: float
    vol_frac_stderr: float = Field(..., ge=0)
    results: list[RealizationResult]


class ErgodicRow(BaseModel):
    copies: int = Field(..., ge=1)
    realizations: int = Field(..., ge=1)
    mean: float
    variance: float = Field(..., ge=0)


class ErgodicReport(BaseModel):
    """Across-seed variance of a spatial average for growing cell periods."""
    quantity: Literal["vol_frac", "mean_v"]
    rows: list[ErgodicRow]
    safety: float = 1.5
    nonincreasing: bool = Field(..., description="variance(L_next) <= safety * variance(L) for every step")
