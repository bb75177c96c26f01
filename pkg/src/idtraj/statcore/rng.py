"""Seedable random streams.

Every stochastic routine takes an explicit ``numpy.random.Generator``.  Work
cells derive their own stream from a master seed and a tuple of keys, so a
partial rerun draws exactly what the full run drew for the same cell.
"""

import hashlib

import numpy as np


def _key_words(keys):
    digest = hashlib.blake2b(repr(tuple(str(k) for k in keys)).encode(), digest_size=16).digest()
    return [int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4)]


def substream(master_seed, *keys):
    """Generator keyed by ``(master_seed, *keys)``."""
    seed = int(master_seed)
    entropy = [seed & 0xFFFFFFFF, (seed >> 32) & 0xFFFFFFFF] + _key_words(keys)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def make_rng(seed):
    return np.random.default_rng(seed)
