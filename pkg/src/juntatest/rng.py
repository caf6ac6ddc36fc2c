"""Counter-based random streams.

Every random draw in the package comes from a Philox generator keyed by a
``(seed, task...)`` tuple, so a task's stream does not depend on how many
other tasks ran before it or on the number of worker threads.
"""

from __future__ import annotations

import zlib

import numpy as np


def _task_word(t) -> int:
    if isinstance(t, (int, np.integer)):
        return int(t) & 0xFFFFFFFF
    return zlib.crc32(str(t).encode())


def stream(seed: int, *task) -> np.random.Generator:
    """Independent generator for ``task`` under the master ``seed``."""
    ss = np.random.SeedSequence(int(seed) & ((1 << 64) - 1), spawn_key=tuple(_task_word(t) for t in task))
    return np.random.Generator(np.random.Philox(ss))


def as_generator(rand) -> np.random.Generator:
    """Accept a Generator, an int seed, or None (seed 0)."""
    if isinstance(rand, np.random.Generator):
        return rand
    return stream(0 if rand is None else int(rand))


def random_masks(rng: np.random.Generator, n: int, size) -> np.ndarray:
    """Uniform points of {-1,+1}^n as int64 masks."""
    if n == 0:
        return np.zeros(size, dtype=np.int64)
    return rng.integers(0, 1 << n, size=size, dtype=np.int64)
