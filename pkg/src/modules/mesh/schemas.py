"""Mesh schemas."""

from enum import Enum


class NormKind(str, Enum):
    """Norms available on grid functions."""
    L2 = "L2"
    H1_SEMINORM = "H1-seminorm"
    H1 = "H1"
    LP = "Lp"
