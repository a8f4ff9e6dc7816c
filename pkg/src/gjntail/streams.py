"""Splittable random streams.

Every stochastic object in the package derives its generator from a root seed
plus a path of labels, so independent components never share RNG state and any
single component can be re-created in isolation (needed for coupled re-runs).
"""

from __future__ import annotations

import zlib

import numpy as np


def _words(path) -> tuple[int, ...]:
    out = []
    for p in path:
        if isinstance(p, str):
            out.append(zlib.crc32(p.encode("utf-8")))
        elif isinstance(p, (int, np.integer)):
            out.append(int(p))
        else:
            raise TypeError(f"stream path entries must be str or int, got {type(p)!r}")
    return tuple(out)


def substream(seed: int, *path) -> np.random.Generator:
    """Independent PCG64 generator keyed by (seed, *path)."""
    return np.random.default_rng(np.random.SeedSequence((int(seed),) + _words(path)))


def raw_state(seed: int, *path, words: int = 4) -> np.ndarray:
    """uint64 state words keyed by (seed, *path), for kernels that carry
    their own generator state. Never all-zero."""
    ss = np.random.SeedSequence((int(seed),) + _words(path))
    state = ss.generate_state(words, dtype=np.uint64)
    if not state.any():
        state[0] = np.uint64(0x9E3779B97F4A7C15)
    return state
