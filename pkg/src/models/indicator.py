"""Rasterized indicator of the inclusion set."""

from dataclasses import dataclass

import numpy as np

from .grid import Grid


@dataclass(frozen=True, eq=False)
class IndicatorGrid:
    """Cell-wise 0/1 indicator of F (``True`` = inside an inclusion)."""

    cells: np.ndarray
    grid: Grid
    provenance: str | None = None

    def __post_init__(self):
        cells = np.array(self.cells, dtype=bool).reshape(self.grid.shape)
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)

    @property
    def resolution(self) -> int:
        return self.grid.n

    @property
    def dim(self) -> int:
        return self.grid.dim

    @property
    def period(self) -> float:
        return self.grid.length

    @property
    def complement(self) -> np.ndarray:
        return ~self.cells

    @property
    def volume_fraction(self) -> float:
        return float(self.cells.mean())

    @property
    def is_empty(self) -> bool:
        return not self.cells.any()
