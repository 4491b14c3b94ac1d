"""Seed derivation and forkable deterministic random streams.

Substreams are derived from logical labels (iteration index, role) rather
than from call order, so results do not depend on worker count or
scheduling.
"""

from __future__ import annotations

import hashlib
import random

_MASK64 = (1 << 64) - 1


def derive_seed(*parts: int | str) -> int:
    """Hash a sequence of labels into a 64-bit seed.

    Accepts integers and strings; the encoding is length-prefixed and typed
    so distinct part sequences cannot collide by concatenation.
    """
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        if isinstance(part, str):
            data = part.encode("utf-8")
            h.update(b"s")
        else:
            data = int(part).to_bytes(16, "little", signed=True)
            h.update(b"i")
        h.update(len(data).to_bytes(2, "little"))
        h.update(data)
    return int.from_bytes(h.digest(), "little")


class SeededStream:
    """Deterministic random stream with ordered substream forking."""

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK64
        self._rng = random.Random(self.seed)

    def uniform(self, low: float, high: float) -> float:
        return self._rng.uniform(low, high)

    def randint(self, low: int, high: int) -> int:
        """Uniform integer in the inclusive range [low, high]."""
        return self._rng.randint(low, high)

    def fork(self) -> "SeededStream":
        """Derive an independent substream; fork order defines identity."""
        return SeededStream(self._rng.getrandbits(64))
