"""Reproducible random-number streams.

All stochastic operations in the package take either an integer seed or a
``numpy.random.Generator``.  Streams are built on the counter-based Philox
bit generator so that independent substreams can be derived from a master
seed by key splitting: a stream is addressed by a tuple path such as
``(scenario, dataset, run)``, and adding new paths never perturbs existing
ones.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["as_generator", "derive", "stable_key"]


def as_generator(seed) -> np.random.Generator:
    """Return a Philox-backed Generator for ``seed``.

    ``seed`` may be an int, a SeedSequence, an existing Generator (returned
    unchanged), or None (fresh OS entropy).
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.Philox(seed))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def derive(master_seed: int, *path: int) -> np.random.Generator:
    """Derive the substream of ``master_seed`` addressed by ``path``.

    Distinct paths give statistically independent streams; the same
    (master_seed, path) always gives the same stream.
    """
    ss = np.random.SeedSequence(master_seed, spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))


def stable_key(text: str) -> int:
    """Map a string to a stable 32-bit integer for use in a stream path.

    Uses SHA-256, so the value does not depend on the process or on
    Python's salted ``hash``.
    """
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big")
