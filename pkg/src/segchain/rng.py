"""Named random streams derived from one 64-bit seed.

Each subsystem draws from its own stream, so adding draws in one place does
not shift the sequence seen by another.
"""
from __future__ import annotations

import hashlib
import random


def derive_seed(seed: int, name: str) -> int:
    d = hashlib.sha256(seed.to_bytes(8, "big", signed=False) + name.encode()).digest()
    return int.from_bytes(d[:8], "big")


def stream(seed: int, name: str) -> random.Random:
    return random.Random(derive_seed(seed, name))


class Streams:
    def __init__(self, seed: int):
        self.seed = seed & (2**64 - 1)
        self._cache: dict[str, random.Random] = {}

    def __getitem__(self, name: str) -> random.Random:
        if name not in self._cache:
            self._cache[name] = stream(self.seed, name)
        return self._cache[name]

    def randbytes(self, name: str, n: int) -> bytes:
        return self[name].getrandbits(8 * n).to_bytes(n, "big")
