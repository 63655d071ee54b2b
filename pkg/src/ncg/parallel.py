"""Deterministic work partitioning across processes.

Enumerations split into contiguous index ranges (one per worker); results
merge in range order, so payloads are byte-identical for any worker count.
"""

from __future__ import annotations

import os


def resolve_threads(flag: int | None = None) -> int:
    """--threads flag wins over NCG_THREADS; default = available parallelism."""
    if flag is not None and flag > 0:
        return flag
    env = os.environ.get("NCG_THREADS")
    if env:
        try:
            value = int(env)
            if value > 0:
                return value
        except ValueError:
            pass
    return os.cpu_count() or 1


def run_partitioned(worker, n, p, q, total, threads):
    """Apply worker((n, p, q, lo, hi)) over `threads` contiguous ranges.

    Falls back to in-process execution for a single worker or when a process
    pool is unavailable (results are identical either way).
    """
    threads = max(1, min(threads, total))
    bounds = [(total * t) // threads for t in range(threads + 1)]
    jobs = [
        (n, p, q, bounds[t], bounds[t + 1])
        for t in range(threads)
        if bounds[t] < bounds[t + 1]
    ]
    if len(jobs) == 1:
        return [worker(jobs[0])]
    try:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=len(jobs)) as pool:
            return list(pool.map(worker, jobs))
    except (OSError, RuntimeError, ImportError):
        return [worker(job) for job in jobs]
