"""Dporosity schemas - problem containers, error rows and sweep reports."""

from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Optional

import numpy as np
from pydantic import BaseModel, Field

from src.models import (
    BoundaryCondition,
    FaceField,
    Grid,
    GridFunction,
    InclusionSet,
    IndicatorGrid,
    SparseOperator,
)
from src.modules.mesh.service import assemble_operator, coefficient_field


class DomainKind(str, Enum):
    """Macroscopic domain: a box with zero Dirichlet data or a torus."""
    BOX = "box"
    TORUS = "torus"


class Domain(BaseModel):
    """The cube ``(0, side)^d``."""
    kind: DomainKind = DomainKind.BOX
    side: float = Field(1.0, gt=0)

    @property
    def periodic(self) -> bool:
        return self.kind == DomainKind.TORUS


@dataclass(frozen=True, eq=False)
class EpsProblem:
    """``u - div((1 - chi_eps + eps^2 chi_eps) grad u) = f`` on a gridded domain.

    ``cell_resolution`` is the number of grid cells per scaled period, so
    ``phi(x / eps)`` is sampled exactly by index arithmetic.
    """

    domain: Domain
    geometry: InclusionSet
    eps: float
    f: GridFunction
    chi_eps: IndicatorGrid
    cell_resolution: int
    inclusion_count: int

    @property
    def grid(self) -> Grid:
        return self.chi_eps.grid

    @property
    def outside(self) -> np.ndarray:
        return self.chi_eps.complement

    @cached_property
    def operator(self) -> SparseOperator:
        coeff = coefficient_field(self.chi_eps, outside=1.0, inside=self.eps**2, mass=1.0)
        return assemble_operator(coeff, BoundaryCondition.natural(self.grid))


@dataclass(frozen=True, eq=False)
class CoupledSolution:
    """Solution ``(u_bar_eps, w_eps)`` of the coupled two-scale system."""

    u_bar: GridFunction
    w: GridFunction
    asymmetry: float
    bound_ratio: float


@dataclass(frozen=True, eq=False)
class Expansion:
    """Two-scale ansatz fields on the eps-problem grid."""

    u_smooth: GridFunction
    outside: GridFunction
    inside: GridFunction
    gradient: FaceField


class ErrorRow(BaseModel):
    """Error norms of one eps-solve against its two-scale expansion."""
    eps: float = Field(..., gt=0)
    resolution: int
    err_h1_outside: float = Field(..., ge=0, description="H1 error of u_eps - u_bar - eps phi_i d_i u_bar outside F")
    err_l2_inside: float = Field(..., ge=0, description="L2 error of u_eps - u_bar - v (f - u_bar) on D")
    grad_defect: float = Field(..., ge=0, description="L2 defect of (1 - chi)(grad u_eps - (e_i + grad phi_i) d_i u_bar)")
    inside_left: Optional[float] = Field(None, ge=0)
    inside_right: Optional[float] = Field(None, ge=0)
    inside_ratio: Optional[float] = Field(None, ge=0)
    hminus1_defect: Optional[float] = Field(None, ge=0)
    coupled_h1_outside: Optional[float] = Field(None, ge=0)
    coupled_l2: Optional[float] = Field(None, ge=0)
    energy_residual: float = Field(0.0, ge=0)

    @property
    def total(self) -> float:
        return self.err_h1_outside + self.err_l2_inside


class InsideDiagnostics(BaseModel):
    """Both sides of the inside-inclusion L2 estimate and the negative-norm defect."""
    left: float = Field(..., ge=0)
    right: float = Field(..., ge=0)
    ratio: float = Field(..., ge=0)
    hminus1_defect: float = Field(..., ge=0)


class CoupledErrors(BaseModel):
    h1_outside: float = Field(..., ge=0)
    l2: float = Field(..., ge=0)


class SlopeFit(BaseModel):
    """Least-squares fit of ``log error = slope * log eps + intercept``."""
    slope: Optional[float] = None
    intercept: Optional[float] = None
    rms: Optional[float] = None
    points: int = 0
    discarded_largest: bool = False


class WeakLimitRow(BaseModel):
    test_function: str
    eps: float
    scalar_defect: float = Field(..., ge=0)
    flux_defect: float = Field(..., ge=0)


class WeakLimitReport(BaseModel):
    rows: list[WeakLimitRow]
    decreasing: dict[str, bool] = Field(..., description="Per test function: last-eps defects below first-eps defects")

    @property
    def all_decreasing(self) -> bool:
        return all(self.decreasing.values())


class SweepReport(BaseModel):
    """Errors over a list of eps, with fitted log-log slopes."""
    domain: DomainKind
    realizations: int = 1
    eps: list[float]
    rows: list[ErrorRow]
    stderr: Optional[list[ErrorRow]] = None
    slopes: dict[str, SlopeFit] = Field(default_factory=dict)
