"""Occupations, pending-node queues, PoW records and roster maintenance."""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence, TextIO

from .crypto import digest_int, hash_bytes

GROWTH_BATCH = 10
POWER_EPS = 1e-9


class MembershipError(Exception):
    pass


class InsufficientDifficulty(MembershipError):
    pass


class DuplicateIdentity(MembershipError):
    pass


class StalePrevBlockRef(MembershipError):
    pass


class Status(str, enum.Enum):
    PENDING = "pending"
    ACTIVE = "active"
    ELIMINATED = "eliminated"


class Keepalive(str, enum.Enum):
    PASS = "pass"
    DROP = "drop"


@dataclass
class NodeRecord:
    identity_key: bytes
    occupation: int
    power: float = 1.0
    honest: bool = True
    assigned_segment: int | None = None
    status: Status = Status.PENDING

    def check(self) -> None:
        if self.status is Status.ACTIVE and self.assigned_segment is None:
            raise MembershipError("active node without a segment")
        if self.status is Status.PENDING and self.assigned_segment is not None:
            raise MembershipError("pending node holding a segment")


@dataclass(frozen=True)
class PowRecord:
    prev_block_ref: bytes
    identity_key: bytes
    claimed_difficulty: int
    nonce: bytes = bytes(32)
    occupation: int | None = None

    def __post_init__(self):
        if self.claimed_difficulty <= 0:
            raise ValueError("claimed difficulty must be positive")

    def preimage(self) -> bytes:
        occ = b"" if self.occupation is None else self.occupation.to_bytes(4, "big")
        return self.prev_block_ref + occ + self.identity_key + self.nonce

    def to_json(self) -> dict:
        return {
            "prev_block_ref": self.prev_block_ref.hex(),
            "identity_key": self.identity_key.hex(),
            "occupation": self.occupation,
            "claimed_difficulty": self.claimed_difficulty,
            "nonce": self.nonce.hex(),
        }

    @classmethod
    def from_json(cls, d: Mapping) -> "PowRecord":
        return cls(
            prev_block_ref=bytes.fromhex(d["prev_block_ref"]),
            identity_key=bytes.fromhex(d["identity_key"]),
            claimed_difficulty=int(d["claimed_difficulty"]),
            nonce=bytes.fromhex(d["nonce"]),
            occupation=d.get("occupation"),
        )


# Hash-mode PoW: difficulty d means digest < 2**256 // d, i.e. d expected attempts.
def pow_target(difficulty: int) -> int:
    return (1 << 256) // difficulty


def pow_hash(pow: PowRecord) -> bytes:
    return hash_bytes(pow.preimage())


def pow_meets_target(pow: PowRecord) -> bool:
    return digest_int(pow_hash(pow)) < pow_target(pow.claimed_difficulty)


def solve_pow(
    prev_block_ref: bytes,
    identity_key: bytes,
    difficulty: int,
    occupation: int | None = None,
    start: int = 0,
    max_attempts: int | None = None,
) -> PowRecord | None:
    target = pow_target(difficulty)
    n = start
    while max_attempts is None or n - start < max_attempts:
        rec = PowRecord(prev_block_ref, identity_key, difficulty, n.to_bytes(32, "big"), occupation)
        if digest_int(pow_hash(rec)) < target:
            return rec
        n += 1
    return None


def anchor_height(h: int, s: int) -> int:
    """Height whose block hash anchors PoW submitted at height ``h``; genesis when h - s < 0."""
    return max(h - s, 0)


@dataclass(frozen=True)
class PendingQueue:
    """Per-occupation FIFO lists PN[1..m] of identity keys, oldest first."""

    lists: tuple[tuple[bytes, ...], ...]

    @classmethod
    def empty(cls, m: int) -> "PendingQueue":
        if m < 1:
            raise ValueError("m must be >= 1")
        return cls(tuple(() for _ in range(m)))

    @property
    def m(self) -> int:
        return len(self.lists)

    def lengths(self) -> list[int]:
        return [len(q) for q in self.lists]

    def __getitem__(self, occupation: int) -> tuple[bytes, ...]:
        return self.lists[occupation - 1]

    def __contains__(self, key: bytes) -> bool:
        return any(key in q for q in self.lists)

    def keys(self) -> list[bytes]:
        return [k for q in self.lists for k in q]

    def append(self, occupation: int, key: bytes) -> "PendingQueue":
        if key in self:
            raise DuplicateIdentity(key.hex())
        lists = list(self.lists)
        lists[occupation - 1] = lists[occupation - 1] + (key,)
        return PendingQueue(tuple(lists))

    def remove(self, key: bytes) -> "PendingQueue":
        return PendingQueue(tuple(tuple(k for k in q if k != key) for q in self.lists))

    def pop_head(self, occupation: int) -> tuple[bytes, "PendingQueue"]:
        q = self.lists[occupation - 1]
        lists = list(self.lists)
        lists[occupation - 1] = q[1:]
        return q[0], PendingQueue(tuple(lists))

    def take_front(self, count: int) -> tuple[list[list[bytes]], "PendingQueue"]:
        taken = [list(q[:count]) for q in self.lists]
        return taken, PendingQueue(tuple(q[count:] for q in self.lists))


def choose_occupation(queue: PendingQueue, among: Sequence[int] | None = None) -> int:
    """Occupation with the shortest pending list; ties go to the lowest index.

    ``among`` restricts the choice (an adversary flooding only the front T occupations).
    """
    candidates = among if among is not None else range(1, queue.m + 1)
    return min(candidates, key=lambda i: (len(queue[i]), i))


def submit_join(
    queue: PendingQueue,
    pow: PowRecord,
    s: int,
    P: int,
    expected_anchor: bytes,
    taken: Iterable[bytes] = (),
) -> PendingQueue:
    """Append a verified join PoW's node to its occupation's pending list."""
    if pow.occupation is None or not 1 <= pow.occupation <= queue.m:
        raise MembershipError("join PoW must name an occupation in 1..m")
    if pow.claimed_difficulty < P * s:
        raise InsufficientDifficulty(f"{pow.claimed_difficulty} < {P}*{s}")
    if pow.prev_block_ref != expected_anchor:
        raise StalePrevBlockRef(pow.prev_block_ref.hex())
    if pow.identity_key in set(taken):
        raise DuplicateIdentity(pow.identity_key.hex())
    return queue.append(pow.occupation, pow.identity_key)


def keepalive_check(node: NodeRecord, power_spent: float, P: float = 1.0, window: int = 1) -> Keepalive:
    """Pending nodes need P per iteration; active nodes need P per iteration summed over
    their proof window of ``window`` iterations (normally s)."""
    if node.status is Status.ELIMINATED:
        raise MembershipError("eliminated nodes are not checked")
    need = P if node.status is Status.PENDING else P * window
    return Keepalive.PASS if power_spent + POWER_EPS * need >= need else Keepalive.DROP


def growth_trigger(queue: PendingQueue, batch: int = GROWTH_BATCH) -> bool:
    return min(queue.lengths()) >= batch


@dataclass
class Roster:
    """Active m x s grid plus every known node record."""

    m: int
    s: int
    grid: dict[tuple[int, int], bytes] = field(default_factory=dict)
    nodes: dict[bytes, NodeRecord] = field(default_factory=dict)

    def keeper(self, occupation: int, segment: int) -> NodeRecord:
        return self.nodes[self.grid[(occupation, segment)]]

    def keepers(self, segment: int) -> list[NodeRecord]:
        return [self.keeper(i, segment) for i in range(1, self.m + 1)]

    def active_by_occupation(self) -> dict[int, list[bytes]]:
        out: dict[int, list[bytes]] = {i: [] for i in range(1, self.m + 1)}
        for (occ, seg), key in sorted(self.grid.items()):
            out[occ].append(key)
        return out

    def apply_assignment(self, grid: Mapping[tuple[int, int], bytes]) -> None:
        self.grid = dict(grid)
        for (occ, seg), key in self.grid.items():
            rec = self.nodes[key]
            rec.assigned_segment = seg
            rec.status = Status.ACTIVE

    def is_exact_grid(self) -> bool:
        expected = {(i, k) for i in range(1, self.m + 1) for k in range(1, self.s + 1)}
        if set(self.grid) != expected:
            return False
        keys = list(self.grid.values())
        if len(set(keys)) != len(keys):
            return False
        for (occ, seg), key in self.grid.items():
            rec = self.nodes.get(key)
            if rec is None or rec.status is not Status.ACTIVE or rec.occupation != occ or rec.assigned_segment != seg:
                return False
        active = [r for r in self.nodes.values() if r.status is Status.ACTIVE]
        return len(active) == len(keys)

    def copy(self) -> "Roster":
        return Roster(self.m, self.s, dict(self.grid), {k: replace(v) for k, v in self.nodes.items()})


def eliminate_and_backfill(
    roster: Roster, failed: NodeRecord, queue: PendingQueue
) -> tuple[Roster, PendingQueue, int]:
    """Remove a keeper that missed its proof.

    The head of its occupation's pending list takes over the slot. With an
    empty list the failed node's segment column is dissolved (s - 1): the other
    keepers of that segment go back to the pending lists in occupation order and
    higher segments shift down by one. Storage is not re-ranked here.
    """
    if failed.status is not Status.ACTIVE:
        raise MembershipError("only active nodes can be eliminated here")
    roster = roster.copy()
    occ, seg = failed.occupation, failed.assigned_segment
    rec = roster.nodes[failed.identity_key]
    rec.status = Status.ELIMINATED
    rec.assigned_segment = None

    if queue[occ]:
        head, queue = queue.pop_head(occ)
        roster.grid[(occ, seg)] = head
        newcomer = roster.nodes[head]
        newcomer.status = Status.ACTIVE
        newcomer.assigned_segment = seg
        return roster, queue, 0

    if roster.s == 1:
        raise MembershipError("cannot dissolve the only segment")

    del roster.grid[(occ, seg)]
    for i in range(1, roster.m + 1):
        if i == occ:
            continue
        key = roster.grid.pop((i, seg))
        back = roster.nodes[key]
        back.status = Status.PENDING
        back.assigned_segment = None
        queue = queue.append(i, key)
    shifted = {}
    for (i, k), key in roster.grid.items():
        nk = k - 1 if k > seg else k
        shifted[(i, nk)] = key
        roster.nodes[key].assigned_segment = nk
    roster.grid = shifted
    roster.s -= 1
    return roster, queue, -1


def write_roster_csv(roster: Roster, out: TextIO) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["identity_key", "occupation", "segment", "status", "honest"])
    for key in sorted(roster.nodes):
        r = roster.nodes[key]
        w.writerow([
            key.hex(),
            r.occupation,
            "" if r.assigned_segment is None else r.assigned_segment,
            r.status.value,
            int(r.honest),
        ])
