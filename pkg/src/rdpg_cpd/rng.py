"""Seeded random streams.

Every random draw in the package comes from a Philox (counter-based, 64-bit)
generator keyed by a root seed plus a tuple of stream labels. Labels are
integers or strings (strings are mapped through CRC-32), so e.g. benchmark
trial ``k`` of cell ``c`` gets the stream ``(seed, c, k)`` regardless of the
order in which trials run.
"""

import zlib

import numpy as np


def _label(x):
    if isinstance(x, str):
        return zlib.crc32(x.encode("utf-8"))
    return int(x)


def make_rng(seed, *stream) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(_label(s) for s in stream))
    return np.random.Generator(np.random.Philox(ss))


def as_rng(seed_or_rng, *stream) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return make_rng(0 if seed_or_rng is None else seed_or_rng, *stream)
