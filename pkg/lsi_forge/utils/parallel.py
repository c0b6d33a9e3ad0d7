"""Bounded worker pool and reproducible random streams.

Results are always returned in submission order, so a run with a fixed seed
produces the same output for any thread count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterator, List, Sequence, Tuple, TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")


def spawn_generators(seed: int, count: int) -> List[np.random.Generator]:
    """One independent generator per task, derived from a single root seed."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.default_rng(child) for child in children]


def ordered_map(fn: Callable[[T], R], items: Sequence[T], threads: int = 1) -> List[R]:
    """Apply ``fn`` to every item with at most ``threads`` workers."""
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as executor:
        return list(executor.map(fn, items))


def batches(total: int, size: int) -> Iterator[Tuple[int, int]]:
    """Yield half-open ``(start, stop)`` ranges covering ``range(total)``."""
    start = 0
    while start < total:
        stop = min(total, start + size)
        yield start, stop
        start = stop

