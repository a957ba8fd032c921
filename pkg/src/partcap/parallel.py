"""Deterministic process-pool helpers shared by the counting and scan code."""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Sequence

WORKERS_ENV = "PARTCAP_WORKERS"

# elements per vectorized batch (rows x branches)
BATCH_ELEMENTS = 1 << 20


def default_workers() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            value = int(env)
        except ValueError:
            raise ValueError(f"{WORKERS_ENV} must be a positive integer, got {env!r}") from None
        if value < 1:
            raise ValueError(f"{WORKERS_ENV} must be a positive integer, got {env!r}")
        return value
    return os.cpu_count() or 1


def resolve_workers(workers: int | None) -> int:
    return default_workers() if workers is None else max(1, int(workers))


def ordered_map(func: Callable, items: Sequence, workers: int | None = 1) -> list:
    """map(func, items) with results in input order whatever the worker count."""
    workers = resolve_workers(workers)
    items = list(items)
    if workers == 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(func, items))


def chunked(seq: Sequence, size: int) -> Iterable[Sequence]:
    size = max(1, int(size))
    for start in range(0, len(seq), size):
        yield seq[start : start + size]
