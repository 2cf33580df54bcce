"""Modules package - Feature-based domain modules."""
