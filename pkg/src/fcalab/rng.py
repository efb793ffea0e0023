"""Reproducible counter-based random streams.

One 64-bit master seed; stream r uses a Philox generator keyed by
splitmix64(master XOR r*GOLDEN). Streams are independent of how work is
batched across workers, so parallel runs aggregate to identical results.
"""

from __future__ import annotations

import numpy as np

__all__ = ["mix_seed", "substream"]

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def mix_seed(master: int, index: int) -> int:
    """splitmix64 finalizer applied to master XOR index*GOLDEN."""
    z = (master ^ ((index + 1) * _GOLDEN)) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return (z ^ (z >> 31)) & _MASK


def substream(master: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=mix_seed(master, index)))
