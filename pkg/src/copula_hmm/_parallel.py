"""Replicate seeding and an order-preserving parallel map."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np


def replicate_seeds(rng_or_seed, n: int) -> list[int]:
    """``n`` independent integer seeds derived from a generator or a root seed."""
    if isinstance(rng_or_seed, np.random.Generator):
        return [int(s) for s in rng_or_seed.integers(0, 2**63 - 1, size=n)]
    children = np.random.SeedSequence(rng_or_seed).spawn(n)
    return [int(c.generate_state(2, dtype=np.uint64)[0] >> np.uint64(1)) for c in children]


def resolve_threads(threads: int | None = None) -> int:
    env = os.environ.get("CHMM_THREADS")
    if env:
        threads = int(env)
    return max(1, int(threads or 1))


def ordered_map(fn, items, threads: int | None = None) -> list:
    """``[fn(x) for x in items]``, optionally across processes; output order matches input."""
    items = list(items)
    n = resolve_threads(threads)
    if n <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
