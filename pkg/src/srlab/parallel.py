"""Ordered data-parallel map capped by the ``SR_THREADS`` environment variable."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Optional


def worker_count(requested: Optional[int] = None) -> int:
    """Number of worker processes: ``requested``, capped by ``SR_THREADS`` and the CPU count."""
    cap = os.environ.get("SR_THREADS")
    n = requested if requested is not None else (os.cpu_count() or 1)
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            pass
    return max(1, n)


def ordered_map(func: Callable, items: Iterable, workers: Optional[int] = None) -> list:
    """``[func(item) for item in items]``, computed on up to ``worker_count(workers)`` processes.

    Results come back in input order, so the output never depends on
    scheduling.  ``func`` and the items must be picklable when more than one
    worker is used.
    """
    items = list(items)
    n = min(worker_count(workers), len(items))
    if n <= 1:
        return [func(it) for it in items]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(func, items))
