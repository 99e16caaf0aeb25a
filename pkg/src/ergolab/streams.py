"""Counter-based random streams.

Each stream is addressed by (seed, tag, index...) and backed by a Philox
generator, so a trial or restart draws the same numbers no matter which
order, process or thread evaluates it.
"""

from __future__ import annotations

import zlib

import numpy as np

MASK64 = (1 << 64) - 1


def _word(part) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    return int(part) & MASK64


def stream(seed: int, *path) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=int(seed) & MASK64, spawn_key=tuple(_word(p) for p in path))
    return np.random.Generator(np.random.Philox(seq))
