"""Seed handling and derived substreams.

Every random quantity in the package comes from numpy's PCG64 generator.
A top-level seed is a 64-bit integer; independent substreams are derived
with ``SeedSequence(seed, spawn_key=key)``, so replicate and chunk streams
are fixed by (seed, key) alone and never depend on scheduling or worker
count.
"""

from __future__ import annotations

import operator

import numpy as np

from .errors import ParameterError

__all__ = ["check_seed", "make_rng"]


def check_seed(seed) -> int:
    try:
        seed = operator.index(seed)
    except TypeError as exc:
        raise ParameterError(f"seed must be an integer, got {seed!r}") from exc
    if not 0 <= seed < 2**64:
        raise ParameterError(f"seed must be a 64-bit value, got {seed}")
    return seed


def make_rng(seed, *key) -> np.random.Generator:
    """Generator for the given seed; extra integers select a substream."""
    ss = np.random.SeedSequence(
        entropy=check_seed(seed), spawn_key=tuple(int(k) for k in key)
    )
    return np.random.Generator(np.random.PCG64(ss))
