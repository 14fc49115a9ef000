"""Hashing and Bitcoin-style transaction Merkle trees.

Digests are raw 32-byte SHA-256 outputs. When a digest is used as a number
(ranking, modular reduction) it is read as an unsigned big-endian integer, so
comparing two digests as ``bytes`` gives the same order as comparing them as
integers.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Sequence

DIGEST_SIZE = 32
LEFT = "left"
RIGHT = "right"


class EmptyTree(ValueError):
    pass


class BadLeafIndex(IndexError):
    pass


def hash_bytes(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def hash_combine(a: bytes, b: bytes) -> bytes:
    """The infix ``hash`` operator: length-prefixed concatenation, then SHA-256.

    Chains are left-associative: ``x hash y hash z`` is
    ``hash_combine(hash_combine(x, y), z)``.
    """
    return hashlib.sha256(
        len(a).to_bytes(4, "big") + a + len(b).to_bytes(4, "big") + b
    ).digest()


def digest_int(d: bytes) -> int:
    return int.from_bytes(d, "big")


def _next_level(level: Sequence[bytes]) -> list[bytes]:
    out = []
    for i in range(0, len(level), 2):
        left = level[i]
        right = level[i + 1] if i + 1 < len(level) else left
        out.append(hash_combine(left, right))
    return out


@dataclass(frozen=True)
class MerkleTree:
    leaves: tuple[bytes, ...]
    levels: tuple[tuple[bytes, ...], ...]

    @classmethod
    def build(cls, leaves: Sequence[bytes]) -> "MerkleTree":
        if not leaves:
            raise EmptyTree("cannot build a Merkle tree with no leaves")
        levels = [tuple(leaves)]
        while len(levels[-1]) > 1:
            levels.append(tuple(_next_level(levels[-1])))
        return cls(leaves=tuple(leaves), levels=tuple(levels))

    @property
    def root(self) -> bytes:
        return self.levels[-1][0]

    @property
    def depth(self) -> int:
        return len(self.levels) - 1


@dataclass(frozen=True)
class MerkleBranch:
    """Sibling path from a leaf to the root.

    ``leaf_index`` is 1-based. Each sibling carries the side it sits on
    relative to the running hash, so ``(d, RIGHT)`` means ``hash(running, d)``.
    """

    leaf_index: int
    siblings: tuple[tuple[bytes, str], ...]

    def position(self) -> int:
        """0-based leaf position implied by the sibling sides."""
        pos = 0
        for bit, (_, side) in enumerate(self.siblings):
            if side == LEFT:
                pos |= 1 << bit
        return pos


def merkle_root(leaves: Sequence[bytes]) -> bytes:
    if not leaves:
        raise EmptyTree("cannot take the Merkle root of no leaves")
    level = list(leaves)
    while len(level) > 1:
        level = _next_level(level)
    return level[0]


def merkle_branch(tree: MerkleTree, leaf_index: int) -> MerkleBranch:
    n = len(tree.leaves)
    if not 1 <= leaf_index <= n:
        raise BadLeafIndex(f"leaf index {leaf_index} outside 1..{n}")
    idx = leaf_index - 1
    siblings = []
    for level in tree.levels[:-1]:
        if idx % 2 == 0:
            sib = level[idx + 1] if idx + 1 < len(level) else level[idx]
            siblings.append((sib, RIGHT))
        else:
            siblings.append((level[idx - 1], LEFT))
        idx //= 2
    return MerkleBranch(leaf_index=leaf_index, siblings=tuple(siblings))


def verify_branch(leaf: bytes, branch: MerkleBranch, root: bytes) -> bool:
    running = leaf
    try:
        for sib, side in branch.siblings:
            if len(sib) != DIGEST_SIZE:
                return False
            if side == RIGHT:
                running = hash_combine(running, sib)
            elif side == LEFT:
                running = hash_combine(sib, running)
            else:
                return False
    except TypeError:
        return False
    return running == root
