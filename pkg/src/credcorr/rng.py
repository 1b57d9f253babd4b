"""Seeded, chunk-partitioned random streams.

Draws are split into fixed-size chunks and chunk ``k`` always gets the stream
``PCG64(SeedSequence(seed, spawn_key=(k,)))``. Results are combined in chunk
order, so output depends on (seed, draws) only, never on the worker count.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

import numpy as np

CHUNK_SIZE = 1 << 16
THREADS_ENV = "CREDCORR_THREADS"
RNG_ALGORITHM = (
    f"numpy {np.__version__} PCG64; stream per chunk = SeedSequence(seed, spawn_key=(chunk,)); "
    f"chunk size {CHUNK_SIZE}"
)

T = TypeVar("T")


def default_threads() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return 1


def chunk_generator(seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(chunk,))))


def chunk_sizes(draws: int) -> list[int]:
    if draws < 1:
        raise ValueError(f"draws must be >= 1, got {draws}")
    full, rest = divmod(draws, CHUNK_SIZE)
    return [CHUNK_SIZE] * full + ([rest] if rest else [])


def map_chunks(fn: Callable[[np.random.Generator, int], T], draws: int, seed: int,
               threads: int | None = None) -> list[T]:
    """Apply ``fn(rng, n)`` to every chunk; results are returned in chunk order."""
    sizes = chunk_sizes(draws)
    threads = default_threads() if threads is None else max(1, int(threads))

    def run(k: int) -> T:
        return fn(chunk_generator(seed, k), sizes[k])

    if threads == 1 or len(sizes) == 1:
        return [run(k) for k in range(len(sizes))]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(run, range(len(sizes))))
