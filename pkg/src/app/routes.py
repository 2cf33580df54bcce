"""Subcommand registration module."""

from src.modules.cell.router import register as register_cell
from src.modules.dporosity.router import register as register_dporosity
from src.modules.extlab.router import register as register_extlab
from src.modules.geometry.router import register as register_geometry
from src.modules.verify.router import register as register_verify


def register_commands(subparsers, parents) -> None:
    """Register every subcommand on the top-level parser."""
    register_geometry(subparsers, parents)
    register_cell(subparsers, parents)
    register_dporosity(subparsers, parents)
    register_extlab(subparsers, parents)
    register_verify(subparsers, parents)
