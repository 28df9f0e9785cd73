"""Order-preserving parallel map and grid helpers used by the sweeps."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

__all__ = ["parallel_map", "grid", "chunk_rngs"]


def parallel_map(func, items, workers=1):
    """``list(map(func, items))``, optionally spread over worker processes.

    Output order always follows ``items``, so results do not depend on the
    worker count as long as ``func`` is a pure function of its item.
    """
    items = list(items)
    if workers is None:
        workers = os.cpu_count() or 1
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    chunksize = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items, chunksize=chunksize))


def grid(start, stop, steps):
    """Inclusive uniform grid with ``steps`` points."""
    return np.linspace(start, stop, int(steps))


def chunk_rngs(seed, n_items, chunk_size):
    """Independent generators for fixed-size chunks of ``n_items`` shots.

    Chunk ``k`` uses the stream ``SeedSequence(seed, spawn_key=(k,))`` so a
    shot's random numbers depend only on its chunk, never on scheduling.
    """
    n_chunks = -(-n_items // chunk_size)
    sizes = [min(chunk_size, n_items - k * chunk_size) for k in range(n_chunks)]
    seqs = [np.random.SeedSequence(seed, spawn_key=(k,)) for k in range(n_chunks)]
    return list(zip(seqs, sizes))
