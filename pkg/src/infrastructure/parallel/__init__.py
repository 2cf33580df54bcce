"""Thread-pool helpers."""

from .pool import parallel_map, resolve_threads

__all__ = ["parallel_map", "resolve_threads"]
