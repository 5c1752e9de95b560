"""Reproducible random streams derived from one master seed by label."""

from __future__ import annotations

import hashlib

import numpy as np


def _label_key(labels) -> tuple[int, ...]:
    key = []
    for lab in labels:
        digest = hashlib.sha256(repr(lab).encode()).digest()
        key.append(int.from_bytes(digest[:4], "little"))
    return tuple(key)


def derive_rng(seed: int, *labels) -> np.random.Generator:
    """Generator for the sub-stream ``labels`` of master ``seed``."""
    if seed is None or int(seed) < 0:
        raise ValueError("seed must be a non-negative integer")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=_label_key(labels))
    return np.random.default_rng(ss)


def derive_seed(seed: int, *labels) -> int:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=_label_key(labels))
    return int(ss.generate_state(2, np.uint32).view(np.uint64)[0])
