"""Deterministic fan-out for batch work."""

import os
from concurrent.futures import ProcessPoolExecutor


def effective_jobs(jobs: int | None, task_count: int) -> int:
    if jobs is None:
        jobs = os.cpu_count() or 1
    return max(1, min(jobs, task_count))


def parallel_map(fn, items, jobs: int | None = None) -> list:
    """Apply fn to every item, results in input order for any worker count.

    Items are independent work units; fn must be a module-level callable
    so it can cross a process boundary.  Worker processes are forked, so
    a pool that cannot start (restricted sandboxes) degrades to the
    serial path with identical results.
    """
    items = list(items)
    workers = effective_jobs(jobs, len(items))
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    try:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    except (OSError, PermissionError):
        return [fn(item) for item in items]
