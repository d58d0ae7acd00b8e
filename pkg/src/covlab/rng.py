"""Keyed, splittable random streams.

Every stream is a ``numpy.random.Generator`` driven by the counter-based Philox
bit generator and seeded through ``SeedSequence`` spawn keys, so the stream for
a key such as ``(dist, t_index, n, j)`` is reproducible by index and does not
depend on the order in which streams are created.
"""

from __future__ import annotations

import numpy as np

RandomStream = np.random.Generator


def stream(master_seed: int, *key: int) -> RandomStream:
    """Return the stream addressed by ``key`` under ``master_seed``."""
    seq = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(seq))


def split(rng: RandomStream, count: int) -> list[RandomStream]:
    """Split ``rng`` into ``count`` independent child streams."""
    return list(rng.spawn(count))
