"""Seeded random-stream management.

A single 64-bit run seed fans out into named sub-streams, so swapping one
component (recommender, moderator, user model, scenario) never perturbs
the draws consumed by another.
"""

from __future__ import annotations

import zlib

import numpy as np


def substream(seed: int, *scope) -> np.random.Generator:
    """Return a generator for the sub-stream identified by `scope`.

    The scope parts (strings or ints) are hashed into a spawn key, so
    `substream(seed, "user", t)` is stable across runs and independent of
    every other scope.
    """
    key = tuple(zlib.crc32(str(part).encode("utf8")) for part in scope)
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))
