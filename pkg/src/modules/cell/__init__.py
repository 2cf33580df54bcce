"""Periodic cell problems and homogenized data."""
