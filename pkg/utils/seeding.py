"""
Seeding Helpers
Independent, reproducible numpy generator streams derived from one base seed
"""

import zlib

import numpy as np


def derive_seed(seed, tag):
    """Stable 32-bit sub-seed for a named stream (never Python's hash())."""
    crc = zlib.crc32(str(tag).encode("utf-8")) & 0xFFFFFFFF
    return (int(seed) ^ crc) & 0xFFFFFFFF


def derive_rng(seed, tag):
    """
    Get a numpy Generator dedicated to one consumer.

    Streams with different tags never share draws, so adding a consumer
    (e.g. relabel sampling) leaves every other stream untouched.
    """
    return np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, derive_seed(seed, tag)])


def episode_seeds(seed, count, tag="episodes"):
    """Reset seeds for `count` episodes, identical for identical (seed, tag)."""
    rng = derive_rng(seed, tag)
    return [int(s) for s in rng.integers(0, 2**31 - 1, size=count)]
