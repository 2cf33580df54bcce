"""Application setup package."""
