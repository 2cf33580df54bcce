"""Acceptance suite of the laboratory."""
