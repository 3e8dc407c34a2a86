"""Deterministic, splittable random streams.

Every stochastic choice in the pipeline draws from a stream keyed by the
run seed plus a stable string key (document id, purpose salt).  Keys are
hashed with SHA-256 so the streams do not depend on PYTHONHASHSEED, the
platform, or the order in which documents are processed.
"""

from __future__ import annotations

import hashlib
import random


def stable_hash(*keys: object) -> int:
    """64-bit integer hash of the key tuple, stable across processes."""
    joined = "\x1f".join(str(k) for k in keys)
    digest = hashlib.sha256(joined.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def stable_rng(*keys: object) -> random.Random:
    """Independent RNG for the given key tuple."""
    return random.Random(stable_hash(*keys))
