"""Cell schemas - corrector containers and homogenized data."""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from pydantic import BaseModel, Field

from src.models import FaceField, GridFunction, SparseOperator


class CorrectorVariant(str, Enum):
    """Which approximation of the corrector a set holds."""
    SOFT_RESTRICTED = "SoftRestricted"
    MASSIVE = "Massive"
    DIRICHLET_DOMAIN = "DirichletDomain"


@dataclass(frozen=True, eq=False)
class CorrectorSet:
    """Correctors ``phi_i`` for a subset of directions, with their operator.

    ``energy[i]`` is the energy density ``|cell|^-1 (sum m phi^2 + sum a |e_i + grad phi|^2)``.
    """

    variant: CorrectorVariant
    phi: dict[int, GridFunction]
    grad_phi: dict[int, FaceField]
    operator: SparseOperator
    energy: dict[int, float]
    eps: float | None = None

    @property
    def directions(self) -> list[int]:
        return sorted(self.phi)

    @property
    def grid(self):
        return self.operator.grid


@dataclass(frozen=True, eq=False)
class HomogenizedData:
    """Everything the two-scale expansion needs from the periodic cell.

    ``q[i]`` holds the face components of the flux ``q_i``; ``sigma[i][(j, k)]``
    lives on the edge grid offset by half a cell in axes ``j`` and ``k``;
    ``theta[i]`` lives on the ``i``-faces.
    """

    a_bar: np.ndarray
    a_bar_energy: np.ndarray
    consistency_error: float
    mean_v: float
    vol_frac: float
    v: GridFunction
    correctors: CorrectorSet
    q: dict[int, FaceField] = field(default_factory=dict)
    sigma: dict[int, dict[tuple[int, int], np.ndarray]] = field(default_factory=dict)
    theta: dict[int, np.ndarray] = field(default_factory=dict)
    residuals: dict[str, float] = field(default_factory=dict)

    def summary(self) -> "HomogenizedSummary":
        return HomogenizedSummary(
            a_bar=self.a_bar.tolist(),
            a_bar_energy=self.a_bar_energy.tolist(),
            consistency_error=self.consistency_error,
            mean_v=self.mean_v,
            vol_frac=self.vol_frac,
            resolution=self.v.grid.n,
            dim=self.v.grid.dim,
            residuals=dict(self.residuals),
        )


class HomogenizedSummary(BaseModel):
    """JSON form of `HomogenizedData`."""
    a_bar: list[list[float]] = Field(..., description="Symmetrized flux form of the homogenized matrix")
    a_bar_energy: list[list[float]] = Field(..., description="Energy form of the homogenized matrix")
    consistency_error: float = Field(..., ge=0)
    mean_v: float = Field(..., ge=0, le=1)
    vol_frac: float = Field(..., ge=0, lt=1)
    resolution: int
    dim: int
    residuals: dict[str, float] = Field(default_factory=dict)


class CorrectorMoments(BaseModel):
    """Second moments of the correctors on one realization."""
    phi_mean_square: float = Field(..., ge=0)
    sigma_mean_square: float = Field(..., ge=0)
    theta_mean_square: float = Field(..., ge=0)
    phi_max_square: float = Field(..., ge=0)
    sigma_max_square: float = Field(..., ge=0)
    theta_max_square: float = Field(..., ge=0)
