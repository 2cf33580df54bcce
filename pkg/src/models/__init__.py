"""Domain types shared across feature modules."""

from .grid import BoundaryCondition, BoundaryKind, FaceField, Grid, GridFunction, face_shape
from .inclusion import Capsule, CellCluster, Disc, Inclusion, InclusionModel, InclusionSet
from .indicator import IndicatorGrid
from .operator import GHOST, CoeffField, FaceSet, SparseOperator

__all__ = [
    "BoundaryCondition",
    "BoundaryKind",
    "Capsule",
    "CellCluster",
    "CoeffField",
    "Disc",
    "FaceField",
    "FaceSet",
    "GHOST",
    "Grid",
    "GridFunction",
    "Inclusion",
    "InclusionModel",
    "InclusionSet",
    "IndicatorGrid",
    "SparseOperator",
    "face_shape",
]
