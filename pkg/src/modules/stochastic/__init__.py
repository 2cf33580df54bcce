"""Realizations, ensemble averages and ergodic checks."""
