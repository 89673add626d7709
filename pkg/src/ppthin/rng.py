"""Reproducible random streams keyed by (master_seed, stream_id).

Streams use the counter-based Philox generator: the pair of 64-bit ids is the
key, so equal pairs reproduce the same draw sequence on any platform and
distinct pairs give statistically independent streams without coordination.
Derived ids come from a keyed blake2 hash (never Python's salted hash()).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1


def derive_stream_id(*parts: object) -> int:
    """Stable 64-bit stream id from a tuple of ints/strings."""
    text = "\x1f".join(str(p) for p in parts)
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


@dataclass(frozen=True)
class RngStream:
    """Addressable random stream; equal field pairs replay identical draws."""

    master_seed: int
    stream_id: int = 0

    def __post_init__(self) -> None:
        if not (0 <= int(self.master_seed) <= _MASK64):
            raise ValueError("master_seed must fit in 64 bits")
        if not (0 <= int(self.stream_id) <= _MASK64):
            raise ValueError("stream_id must fit in 64 bits")

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        key = np.array([self.master_seed, self.stream_id], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def split(self, *tags: object) -> "RngStream":
        """Child stream with an id derived from this id and the tags."""
        return RngStream(self.master_seed, derive_stream_id(self.stream_id, *tags))
