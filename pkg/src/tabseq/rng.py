"""Deterministic per-example randomness.

Every random draw in the pipeline comes from a stream keyed by
(global seed, example id, stage tag), so results do not depend on worker
count or processing order.  Independent stages use independent streams,
which keeps the measured rates of each masking component auditable on
their own.
"""

from __future__ import annotations

import hashlib
import random

__all__ = ["stream_seed", "example_rng"]


def stream_seed(global_seed: int, example_id: str, stage: str) -> int:
    """Stable 64-bit seed for one (seed, example, stage) stream."""
    key = f"{global_seed}\x1f{example_id}\x1f{stage}".encode("utf-8")
    digest = hashlib.blake2b(key, digest_size=8).digest()
    return int.from_bytes(digest, "big")


def example_rng(global_seed: int, example_id: str, stage: str) -> random.Random:
    """Fresh generator for one stage of one example."""
    return random.Random(stream_seed(global_seed, example_id, stage))
