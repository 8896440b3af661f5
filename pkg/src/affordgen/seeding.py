"""Named deterministic random streams.

Every random decision in the pipeline draws from a stream derived from the
root seed plus a path of names/indices (e.g. ("objects", scene_index)).
Streams are independent of worker scheduling, so parallel and serial runs
produce identical output.
"""

from __future__ import annotations

import zlib

import numpy as np


def _encode(part: int | str) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    return int(part) & 0xFFFFFFFF


def stream(root_seed: int, *path: int | str) -> np.random.Generator:
    """Derive a reproducible generator for the given (root seed, path)."""
    entropy = [int(root_seed) & 0xFFFFFFFFFFFFFFFF] + [_encode(p) for p in path]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
