"""Small shared helpers: worker pool sizing and deterministic RNG construction."""

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np


def worker_count(n_jobs: int | None = None) -> int:
    """Number of workers to use, capped by the FRACLAP_THREADS environment variable."""
    cap = os.environ.get("FRACLAP_THREADS")
    limit = os.cpu_count() or 1
    if cap is not None:
        try:
            limit = max(1, int(cap))
        except ValueError:
            limit = 1
    if n_jobs is not None:
        limit = min(limit, max(1, n_jobs))
    return limit


def parallel_map(fn, items):
    """Map fn over items, threaded when allowed; results keep the input order."""
    items = list(items)
    n = worker_count(len(items))
    if n <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))
