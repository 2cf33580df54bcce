"""Inclusion geometry: samplers, rasterization and separation statistics."""
