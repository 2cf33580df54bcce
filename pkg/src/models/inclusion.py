"""Inclusion shapes and inclusion sets (JSON-serializable)."""

from enum import Enum
from typing import Annotated, Literal, Union

from pydantic import BaseModel, Field, field_validator, model_validator


class InclusionModel(str, Enum):
    """Random (or deterministic) inclusion processes."""
    PERIODIC_LATTICE = "PeriodicLattice"
    HARD_DISCS_RSA = "HardDiscsRSA"
    POISSON_HALF_GAP = "PoissonHalfGap"
    CHESS_PERCOLATION = "ChessPercolation"
    RANDOM_CAPSULES = "RandomCapsules"
    CUSTOM = "Custom"


class Disc(BaseModel):
    """Open ball (an interval in 1-D). Coordinates are unwrapped."""
    type: Literal["disc"] = "disc"
    id: int = 0
    center: list[float]
    radius: float = Field(..., gt=0)


class Capsule(BaseModel):
    """Points within distance ``width`` of the segment ``[start, end]``.

    ``width`` is the cylinder radius. Equal endpoints degenerate to a disc.
    """
    type: Literal["capsule"] = "capsule"
    id: int = 0
    start: list[float]
    end: list[float]
    width: float = Field(..., gt=0)

    @model_validator(mode="after")
    def _same_dimension(self):
        if len(self.start) != len(self.end):
            raise ValueError("Capsule endpoints have different dimensions")
        return self


class CellCluster(BaseModel):
    """Union of open unit lattice squares, given by unwrapped integer corners."""
    type: Literal["cluster"] = "cluster"
    id: int = 0
    cells: list[list[int]] = Field(..., min_length=1)

    @field_validator("cells")
    @classmethod
    def _edge_connected(cls, cells):
        seen = {tuple(c) for c in cells}
        if len(seen) != len(cells):
            raise ValueError("Duplicate cells in cluster")
        start = next(iter(seen))
        stack, reached = [start], {start}
        while stack:
            cell = stack.pop()
            for axis in range(len(cell)):
                for step in (-1, 1):
                    nb = list(cell)
                    nb[axis] += step
                    nb = tuple(nb)
                    if nb in seen and nb not in reached:
                        reached.add(nb)
                        stack.append(nb)
        if len(reached) != len(seen):
            raise ValueError("Cluster cells are not edge-connected")
        return cells


Inclusion = Annotated[Union[Disc, Capsule, CellCluster], Field(discriminator="type")]


class InclusionSet(BaseModel):
    """Explicit list of inclusions in the fundamental cell ``[0, period)^dim``."""
    model: InclusionModel
    seed: int = 0
    period: float = Field(..., gt=0)
    dim: int = Field(2, ge=1, le=3)
    bounded: bool = False
    saturated: bool = False
    inclusions: list[Inclusion] = Field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.inclusions)
