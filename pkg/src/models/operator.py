"""Coefficient fields, face lists and assembled sparse operators."""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .grid import Grid

GHOST = -1


@dataclass(frozen=True, eq=False)
class CoeffField:
    """Per-cell conductivity ``a`` and mass ``m`` (both nonnegative)."""

    a: np.ndarray
    m: np.ndarray
    grid: Grid

    def __post_init__(self):
        for name in ("a", "m"):
            arr = np.broadcast_to(np.asarray(getattr(self, name), dtype=float), self.grid.shape).copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def levels(self) -> np.ndarray:
        return np.unique(self.a)


@dataclass(frozen=True, eq=False)
class FaceSet:
    """Flat list of faces in cell numbering.

    ``left``/``right`` are flat cell indices; ``GHOST`` marks a Dirichlet ghost (value 0).
    ``dist`` is the center-to-center distance in units of ``h`` (1 inside, 1/2 to a
    ghost) and ``trans`` the transmissibility ``a_f h^(d-2) / dist``.
    """

    left: np.ndarray
    right: np.ndarray
    axis: np.ndarray
    trans: np.ndarray
    dist: np.ndarray

    @property
    def count(self) -> int:
        return int(self.left.size)

    def differences(self, values: np.ndarray) -> np.ndarray:
        """``u_right - u_left`` per face with ghosts read as 0."""
        flat = np.asarray(values, dtype=float).reshape(-1)
        ul = np.where(self.left == GHOST, 0.0, flat[np.maximum(self.left, 0)])
        ur = np.where(self.right == GHOST, 0.0, flat[np.maximum(self.right, 0)])
        return ur - ul


@dataclass(frozen=True, eq=False)
class SparseOperator:
    """Compressed sparse row matrix acting on the active cells ``dofs``.

    ``dofs`` lists the flat cell index of every unknown in order; ``faces`` keeps the
    geometric face list the matrix was assembled from so energies and fluxes can be
    evaluated on solutions.
    """

    matrix: sp.csr_array
    grid: Grid
    dofs: np.ndarray
    faces: FaceSet
    mass: np.ndarray
    symmetric: bool = True

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    @property
    def row_offsets(self) -> np.ndarray:
        return self.matrix.indptr

    @property
    def column_indices(self) -> np.ndarray:
        return self.matrix.indices

    @property
    def entries(self) -> np.ndarray:
        return self.matrix.data

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ x

    def diagonal(self) -> np.ndarray:
        return self.matrix.diagonal()

    def asymmetry(self) -> float:
        """max |A - A^T| (0 for a symmetric assembly)."""
        diff = self.matrix - self.matrix.T
        return float(abs(diff).max()) if diff.nnz else 0.0

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def scatter(self, x: np.ndarray) -> np.ndarray:
        """Place a DOF vector back on the full grid (zero on inactive cells)."""
        full = np.zeros(self.grid.size)
        full[self.dofs] = x
        return full.reshape(self.grid.shape)

    def gather(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values, dtype=float).reshape(-1)[self.dofs]
