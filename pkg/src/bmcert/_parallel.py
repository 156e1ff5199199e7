"""Order-preserving map over a process pool."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor


def default_jobs() -> int:
    value = os.environ.get("BMCERT_JOBS", "")
    try:
        return max(1, int(value))
    except ValueError:
        return 1


def pool_map(fn, items, jobs: int | None = None) -> list:
    """``[fn(item) for item in items]``, spread over ``jobs`` worker processes.

    Results come back in input order, so output never depends on ``jobs``.
    """
    items = list(items)
    jobs = default_jobs() if jobs is None else max(1, int(jobs))
    if jobs == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as pool:
        return list(pool.map(fn, items))
