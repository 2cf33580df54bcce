"""Geometry schemas - sampler parameters and separation statistics."""

from enum import Enum
from typing import Literal, Optional, Union

from pydantic import BaseModel, Field, model_validator


class FixedRadius(BaseModel):
    """Every disc has the same radius."""
    law: Literal["fixed"] = "fixed"
    radius: float = Field(..., gt=0)

    @property
    def max_radius(self) -> float:
        return self.radius


class UniformRadius(BaseModel):
    """Radii drawn uniformly from ``[low, high]``."""
    law: Literal["uniform"] = "uniform"
    low: float = Field(..., gt=0)
    high: float = Field(..., gt=0)

    @model_validator(mode="after")
    def _ordered(self):
        if self.high < self.low:
            raise ValueError("high must be >= low")
        return self

    @property
    def max_radius(self) -> float:
        return self.high


RadiusLaw = Union[FixedRadius, UniformRadius]


class RasterRule(str, Enum):
    """Cell-membership rule used when rasterizing inclusions."""
    CENTER = "center"
    AREA = "area"


class InclusionSeparation(BaseModel):
    """Separation statistics of one inclusion."""
    id: int
    rho: float = Field(..., ge=0, description="Distance to the nearest other inclusion")
    diameter: float = Field(..., gt=0)
    nu: float = Field(..., ge=0, le=1)
    mu: Optional[float] = Field(None, ge=0, le=1, description="rho / width, capsules only")


class SeparationReport(BaseModel):
    """Per-inclusion separations and the empirical moments of their inverses."""
    alpha: float
    beta: Optional[float] = None
    cell_volume: float
    inclusions: list[InclusionSeparation]
    moment_nu: float = Field(..., description="|cell|^-1 sum nu_n^-alpha")
    moment_mu: Optional[float] = Field(None, description="|cell|^-1 sum mu_n^-beta (capsules)")
    moment_gap: Optional[float] = Field(None, description="|cell|^-1 sum rho_n^-beta (capsules)")
    infinite: bool = Field(False, description="Some inclusion touches another (nu = 0)")
    admissible_p: Optional[float] = Field(None, description="Largest p with an extension bound")

    @property
    def min_nu(self) -> float:
        return min(s.nu for s in self.inclusions)
