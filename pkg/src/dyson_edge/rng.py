"""Deterministic random streams indexed by ``(seed, stream_index)``.

Every unit of work (one draw, one path, one suite item) gets its own generator,
so results never depend on scheduling or on the degree of parallelism.
"""
from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1


def mix64(seed: int, index: int) -> int:
    """SplitMix64 finalizer applied to ``seed`` advanced by ``index`` golden-ratio increments."""
    z = (int(seed) + (int(index) + 1) * 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def stream(seed: int, index: int = 0) -> np.random.Generator:
    """Independent PCG64 generator for unit ``index`` of master seed ``seed``."""
    return np.random.Generator(np.random.PCG64(mix64(seed, index)))


def streams(seed: int, count: int, offset: int = 0) -> list[np.random.Generator]:
    return [stream(seed, offset + i) for i in range(count)]


def child_seed(rng: np.random.Generator) -> int:
    """Draw a 64-bit seed from ``rng``; used to fan one stream out into per-draw streams."""
    return int(rng.integers(0, 2**63, dtype=np.int64))
