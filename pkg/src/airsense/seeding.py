"""Deterministic RNG sub-streams derived from a seed plus string labels."""

from __future__ import annotations

import hashlib

import numpy as np


def substream(*parts: object) -> np.random.Generator:
    """Return a generator keyed by the given parts.

    Hashing the textual key gives stable, independent streams across
    processes and platforms, so simulations stay reproducible even when
    components draw in different orders.
    """
    key = "|".join(str(p) for p in parts).encode("utf-8")
    digest = hashlib.sha256(key).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "little"))
