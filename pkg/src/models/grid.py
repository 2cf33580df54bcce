"""Structured cell-centered grids and the fields that live on them."""

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Uniform grid of ``n**dim`` square cells on a torus or a box of side ``length``.

    Cell ``i`` along an axis covers ``[i*h, (i+1)*h)``; its center is ``(i+1/2)*h``.
    """

    n: int
    dim: int
    length: float = 1.0
    periodic: bool = True

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError(f"Unsupported dimension {self.dim}")
        if self.n < 1 or self.length <= 0:
            raise ValueError(f"Invalid grid n={self.n}, length={self.length}")

    @property
    def h(self) -> float:
        return self.length / self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def size(self) -> int:
        return self.n**self.dim

    @property
    def cell_volume(self) -> float:
        return self.h**self.dim

    @property
    def volume(self) -> float:
        return self.length**self.dim

    def axis_coordinates(self) -> np.ndarray:
        return (np.arange(self.n) + 0.5) * self.h

    def centers(self) -> tuple[np.ndarray, ...]:
        """Cell-center coordinates, one array of ``shape`` per axis (``ij`` indexing)."""
        x = self.axis_coordinates()
        return tuple(np.meshgrid(*([x] * self.dim), indexing="ij"))

    def with_length(self, length: float) -> "Grid":
        return Grid(self.n, self.dim, length, self.periodic)


class BoundaryKind(str, Enum):
    """Boundary treatment of a field or an operator."""
    PERIODIC = "Periodic"
    DIRICHLET_ZERO = "DirichletZero"
    MASKED_DIRICHLET = "MaskedDirichlet"


@dataclass(frozen=True, eq=False)
class BoundaryCondition:
    kind: BoundaryKind
    mask: np.ndarray | None = None

    def __post_init__(self):
        if self.kind == BoundaryKind.MASKED_DIRICHLET and self.mask is None:
            raise ValueError("MaskedDirichlet needs a cell mask")

    @classmethod
    def periodic(cls) -> "BoundaryCondition":
        return cls(BoundaryKind.PERIODIC)

    @classmethod
    def dirichlet(cls) -> "BoundaryCondition":
        return cls(BoundaryKind.DIRICHLET_ZERO)

    @classmethod
    def masked(cls, mask: np.ndarray) -> "BoundaryCondition":
        return cls(BoundaryKind.MASKED_DIRICHLET, np.asarray(mask, dtype=bool))

    @classmethod
    def natural(cls, grid: Grid) -> "BoundaryCondition":
        return cls.periodic() if grid.periodic else cls.dirichlet()


@dataclass(frozen=True, eq=False)
class GridFunction:
    """One scalar per cell, tagged with the boundary condition it satisfies.

    Values are copied and frozen on construction. Under ``MaskedDirichlet`` the values
    outside the mask are zero.
    """

    values: np.ndarray
    grid: Grid
    bc: BoundaryCondition = field(default_factory=BoundaryCondition.periodic)

    def __post_init__(self):
        values = np.array(self.values, dtype=float).reshape(self.grid.shape)
        if self.bc.kind == BoundaryKind.MASKED_DIRICHLET:
            if self.bc.mask.shape != self.grid.shape:
                raise ValueError("Mask shape does not match grid")
            values[~self.bc.mask] = 0.0
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, grid: Grid, bc: BoundaryCondition | None = None) -> "GridFunction":
        return cls(np.zeros(grid.shape), grid, bc or BoundaryCondition.natural(grid))

    @classmethod
    def from_callable(cls, grid: Grid, fn, bc: BoundaryCondition | None = None) -> "GridFunction":
        return cls(fn(*grid.centers()), grid, bc or BoundaryCondition.natural(grid))

    @property
    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    def mean(self) -> float:
        return float(self.values.mean())

    def __add__(self, other: "GridFunction") -> "GridFunction":
        return GridFunction(self.values + _raw(other), self.grid, self.bc)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        return GridFunction(self.values - _raw(other), self.grid, self.bc)

    def scaled(self, factor: float) -> "GridFunction":
        return GridFunction(factor * self.values, self.grid, self.bc)


def _raw(other) -> np.ndarray:
    return other.values if isinstance(other, GridFunction) else np.asarray(other)


@dataclass(frozen=True, eq=False)
class FaceField:
    """One value per face and axis.

    On a torus axis ``k`` holds ``n`` faces, face ``i`` sitting between cells ``i`` and
    ``i+1 mod n``. On a box only the ``n-1`` interior faces are stored.
    """

    components: tuple[np.ndarray, ...]
    grid: Grid

    def __post_init__(self):
        if len(self.components) != self.grid.dim:
            raise ValueError("One component per axis is required")
        for axis, comp in enumerate(self.components):
            if comp.shape != face_shape(self.grid, axis):
                raise ValueError(f"Face component {axis} has shape {comp.shape}")

    @cached_property
    def squared_sum(self) -> float:
        return float(sum(np.sum(c**2) for c in self.components))


def face_shape(grid: Grid, axis: int) -> tuple[int, ...]:
    shape = list(grid.shape)
    if not grid.periodic:
        shape[axis] -= 1
    return tuple(shape)
