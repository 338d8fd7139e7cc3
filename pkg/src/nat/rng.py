"""Deterministic named random substreams.

Every random decision in the package draws from a substream keyed by a root
seed plus a path of names (e.g. ``substream(seed, "augment", 3, doc_id)``).
Keying by purpose instead of consumption order keeps results stable when
stages are reordered, skipped, or parallelized.
"""

from __future__ import annotations

import hashlib

import numpy as np


def stream_key(root_seed: int, *path: object) -> int:
    """Collapse (root_seed, path...) into a 64-bit integer key."""
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(root_seed)).encode())
    for part in path:
        h.update(b"/")
        h.update(str(part).encode())
    return int.from_bytes(h.digest(), "little")


def substream(root_seed: int, *path: object) -> np.random.Generator:
    """Generator for the substream named by ``path`` under ``root_seed``."""
    return np.random.default_rng(stream_key(root_seed, *path))
