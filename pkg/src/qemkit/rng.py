"""Deterministic, splittable random streams.

Each stream is a counter-based Philox generator keyed by ``(seed, *path)``
so independent operations never share draws and results do not depend on
call order elsewhere in a run.
"""
import zlib

import numpy as np


def _key_part(p):
    if isinstance(p, (int, np.integer)):
        return int(p) & 0xFFFFFFFF
    return zlib.crc32(str(p).encode())


def make_rng(seed, *path):
    """Return a ``numpy.random.Generator`` for ``seed`` and an operation path."""
    if seed is None:
        seed = 0
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(_key_part(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))
