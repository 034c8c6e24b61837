"""Ordered parallel map over independent grid points."""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor


def pmap(fn, items, workers: int | None = None) -> list:
    """``[fn(x) for x in items]``, optionally spread over worker processes.

    Results keep the input order, so output does not depend on ``workers``.
    ``fn`` and the items must be picklable when ``workers > 1``.
    """
    items = list(items)
    workers = workers or os.cpu_count() or 1
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))
