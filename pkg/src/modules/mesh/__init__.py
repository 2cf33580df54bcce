"""Finite-volume discrete calculus on structured grids."""
