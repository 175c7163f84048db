"""Range partitioning over a thread pool.

Kernels release the GIL (numba ``nogil``, large numpy ops), so threads are
enough. Results always come back in range order, so the output never depends
on the worker count.
"""
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

T = TypeVar("T")


def split_range(total: int, parts: int) -> list[tuple[int, int]]:
    parts = max(1, min(parts, total)) if total > 0 else 1
    edges = [total * i // parts for i in range(parts + 1)]
    return [(edges[i], edges[i + 1]) for i in range(parts)]


def map_ranges(fn: Callable[[int, int], T], total: int, workers: int = 1,
               chunk: int | None = None) -> list[T]:
    """Apply ``fn(start, stop)`` over contiguous chunks of ``range(total)``."""
    if chunk is None:
        ranges = split_range(total, max(1, workers))
    else:
        ranges = [(a, min(a + chunk, total)) for a in range(0, total, chunk)] or [(0, 0)]
    if workers <= 1 or len(ranges) == 1:
        return [fn(a, b) for a, b in ranges]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda r: fn(*r), ranges))
