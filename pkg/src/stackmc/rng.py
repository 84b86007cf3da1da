"""Seeded random streams.

Every stream is a Philox (counter-based) generator keyed by a numpy
``SeedSequence``.  Child seeds are derived from a root seed plus a path of
keys (integers or string tags), so a trial's stream depends only on its own
key path and never on the order in which trials run.
"""
from __future__ import annotations

import zlib

import numpy as np


def _key(part) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    part = int(part)
    if part < 0:
        raise ValueError(f"seed keys must be non-negative, got {part}")
    return part


def derive_seed(root: int, *keys) -> int:
    """Return a 63-bit child seed for ``root`` along the key path ``keys``."""
    ss = np.random.SeedSequence(_key(root), spawn_key=tuple(_key(k) for k in keys))
    hi, lo = ss.generate_state(2, dtype=np.uint32)
    return int(((int(hi) << 32) | int(lo)) & 0x7FFF_FFFF_FFFF_FFFF)


def generator(seed: int, *keys) -> np.random.Generator:
    ss = np.random.SeedSequence(_key(seed), spawn_key=tuple(_key(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))
