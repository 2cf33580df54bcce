"""Order-preserving parallel map on a thread pool.

numpy and scipy release the GIL inside their kernels, so threads are enough for the
independent solves run here. Results always come back in input order; callers reduce
them afterwards so nothing depends on the schedule.
"""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

from src.config import settings

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def resolve_threads(threads: int | None = None) -> int:
    """Return the effective worker count (0 or None means one per core)."""
    if threads is None:
        threads = settings.THREADS
    if threads <= 0:
        threads = os.cpu_count() or 1
    return threads


def parallel_map(fn: Callable[[T], R], items: Iterable[T], threads: int | None = None) -> list[R]:
    """Apply ``fn`` to every item, returning results in input order."""
    items = list(items)
    workers = min(resolve_threads(threads), max(len(items), 1))
    if workers == 1:
        return [fn(item) for item in items]
    logger.debug(f"Running {len(items)} tasks on {workers} threads")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
