"""Counter-style random substreams.

Every stream is keyed by ``(master_seed, *key)``, so a draw never depends on
how many other draws happened before it or in which process.
"""

import zlib

import numpy as np

ALGORITHM = "PCG64"


def _tag(purpose):
    if isinstance(purpose, str):
        return zlib.crc32(purpose.encode("utf-8"))
    return int(purpose)


def substream(master_seed: int, *key) -> np.random.Generator:
    """Generator for ``hash(master_seed, *key)``; string parts are hashed with crc32."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(_tag(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(master_seed: int, *key) -> int:
    """A 64-bit child seed, for handing a sub-experiment its own master seed."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(_tag(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
