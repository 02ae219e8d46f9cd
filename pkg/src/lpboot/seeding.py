"""Deterministic random substreams.

Every random draw in the package comes from a :class:`numpy.random.Generator`
built from a :class:`numpy.random.SeedSequence` whose ``spawn_key`` encodes
*what* the stream is for (design, replication, bootstrap replicate, ...).
Streams therefore never depend on the order in which work is scheduled.
"""

from __future__ import annotations

import numpy as np


def as_seed_sequence(seed) -> np.random.SeedSequence:
    """Coerce an int, ``SeedSequence`` or ``None`` into a ``SeedSequence``."""
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if isinstance(seed, np.random.Generator):
        raise TypeError("pass a seed or SeedSequence, not a Generator")
    return np.random.SeedSequence(seed)


def substream(seed, *keys: int) -> np.random.SeedSequence:
    """Child sequence identified by ``keys`` below ``seed``.

    ``substream(s, 3, 7)`` is a pure function of ``(s, 3, 7)``; unlike
    ``SeedSequence.spawn`` it does not depend on how many children were
    requested before.
    """
    root = as_seed_sequence(seed)
    return np.random.SeedSequence(
        entropy=root.entropy,
        spawn_key=tuple(root.spawn_key) + tuple(int(k) for k in keys),
        pool_size=root.pool_size,
    )


def generator(seed, *keys: int) -> np.random.Generator:
    """A fresh PCG64 generator on ``substream(seed, *keys)``."""
    return np.random.Generator(np.random.PCG64(substream(seed, *keys)))


def describe(seq: np.random.SeedSequence) -> dict:
    """JSON-friendly record that is enough to rebuild ``seq``."""
    return {"entropy": int(seq.entropy), "spawn_key": [int(k) for k in seq.spawn_key]}
