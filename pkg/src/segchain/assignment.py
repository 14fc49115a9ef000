"""Storage (re-)assignment by per-occupation ranking of hashed identities."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .crypto import hash_combine


class RaggedRoster(ValueError):
    pass


@dataclass(frozen=True)
class AssignmentTable:
    grid: Mapping[tuple[int, int], bytes]
    epoch: int = 0

    @property
    def s(self) -> int:
        return max(k for _, k in self.grid) if self.grid else 0

    def segment_of(self, key: bytes) -> int:
        for (_, seg), k in self.grid.items():
            if k == key:
                return seg
        raise KeyError(key.hex())


def rank_occupation(keys: Sequence[bytes], bh: bytes) -> list[bytes]:
    """Keys ordered by ascending RID = ID hash BH; ties by raw ID bytes.

    32-byte digests compare as bytes exactly as they do as big-endian integers.
    """
    return [k for _, k in sorted((hash_combine(k, bh), k) for k in keys)]


def assign_storage(roster: Mapping[int, Sequence[bytes]], bh: bytes, epoch: int = 0) -> AssignmentTable:
    sizes = {len(v) for v in roster.values()}
    if len(sizes) > 1:
        raise RaggedRoster(f"occupation sizes differ: {sorted(sizes)}")
    grid = {}
    for occ in sorted(roster):
        for j, key in enumerate(rank_occupation(roster[occ], bh), start=1):
            grid[(occ, j)] = key
    return AssignmentTable(grid, epoch)
