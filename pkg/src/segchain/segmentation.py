"""Height -> segment layout, segment copies and the old-version retention store."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Protocol, Sequence, TextIO

from .chain import Block, LedgerState, RewardSchedule, apply_block


class HeightOutOfRange(IndexError):
    pass


class DegenerateLayout(ValueError):
    pass


class MissingBlocks(LookupError):
    def __init__(self, heights: Sequence[int]):
        super().__init__(f"block store lacks heights {list(heights)}")
        self.heights = list(heights)


@dataclass(frozen=True)
class SegmentLayout:
    h: int
    s: int

    def __post_init__(self):
        if self.s < 1:
            raise DegenerateLayout(f"segment count must be >= 1, got {self.s}")
        if self.s > self.h:
            raise DegenerateLayout(f"s={self.s} exceeds chain height h={self.h}")

    @property
    def base_len(self) -> int:
        return self.h // self.s

    @property
    def remainder(self) -> int:
        return self.h % self.s

    @property
    def version(self) -> tuple[int, int]:
        return (self.h, self.s)

    def block_range(self, segment: int) -> range:
        if not 1 <= segment <= self.s:
            raise IndexError(f"segment {segment} outside 1..{self.s}")
        start = (segment - 1) * self.base_len + 1
        stop = self.h + 1 if segment == self.s else start + self.base_len
        return range(start, stop)

    def ranges(self) -> list[range]:
        return [self.block_range(k) for k in range(1, self.s + 1)]

    def same_partition(self, other: "SegmentLayout") -> bool:
        return self.ranges() == other.ranges()


def segment_of_height(layout: SegmentLayout, height: int) -> int:
    if not 1 <= height <= layout.h:
        raise HeightOutOfRange(f"height {height} outside 1..{layout.h}")
    return min((height - 1) // layout.base_len + 1, layout.s)


def prover_segment(h: int, s: int) -> int:
    """Segment whose keepers must prove after block ``h`` is created."""
    if s < 1:
        raise ValueError("s must be >= 1")
    return h % s + 1


@dataclass(frozen=True)
class SegmentCopy:
    segment_index: int
    blocks: tuple[Block, ...]
    boundary_state: LedgerState
    layout_version: tuple[int, int]
    # 1-based segment-wide ordinals whose transactions are held in full; None means all
    held_ordinals: frozenset[int] | None = None

    @property
    def first_height(self) -> int:
        return self.blocks[0].height

    @property
    def heights(self) -> range:
        return range(self.blocks[0].height, self.blocks[-1].height + 1)

    def tx_counts(self) -> list[int]:
        return [len(b.transactions) for b in self.blocks]

    def tx_total(self) -> int:
        return sum(self.tx_counts())

    def holds(self, ordinal: int) -> bool:
        return self.held_ordinals is None or ordinal in self.held_ordinals

    def thinned(self, keep: Iterable[int]) -> "SegmentCopy":
        """A copy that keeps only the given ordinals' transactions (a spoofing keeper)."""
        return SegmentCopy(
            self.segment_index, self.blocks, self.boundary_state, self.layout_version, frozenset(keep)
        )


class BlockSource(Protocol):
    genesis_state: LedgerState
    reward_schedule: RewardSchedule

    def get(self, height: int) -> Block | None: ...


@dataclass
class BlockStore:
    """In-memory chain. Plays the network's role when a node must fetch other segments."""

    genesis_state: LedgerState
    reward_schedule: RewardSchedule
    blocks: dict[int, Block] = field(default_factory=dict)
    states: dict[int, LedgerState] = field(default_factory=dict)

    def add(self, block: Block, state: LedgerState | None = None) -> None:
        self.blocks[block.height] = block
        if state is not None:
            self.states[block.height] = state

    def get(self, height: int) -> Block | None:
        return self.blocks.get(height)


def _replay_to(target: int, known: dict[int, LedgerState], chain: BlockSource) -> LedgerState:
    """State after block ``target``, replayed from the nearest earlier known state."""
    if target in known:
        return known[target]
    bases = sorted(h for h in known if h <= target)
    base = bases[-1]
    state = known[base]
    missing = [h for h in range(base + 1, target + 1) if chain.get(h) is None]
    if missing:
        raise MissingBlocks(missing)
    for h in range(base + 1, target + 1):
        state = apply_block(state, chain.get(h), chain.reward_schedule)
    known[target] = state
    return state


def rebuild_segments(
    old: Sequence[SegmentCopy], chain: BlockSource, new_layout: SegmentLayout
) -> list[SegmentCopy]:
    """Re-cut segment copies for ``new_layout``.

    Boundary states come from the nearest earlier state available locally
    (old boundaries, the genesis state, or whatever the store caches) plus a
    replay of the blocks in between. The old copies are not modified.
    """
    if old and all(c.layout_version == new_layout.version for c in old) and len(old) == new_layout.s:
        return list(old)

    needed = [h for h in range(1, new_layout.h + 1) if chain.get(h) is None]
    if needed:
        raise MissingBlocks(needed)

    known: dict[int, LedgerState] = {chain.genesis_state.height_basis: chain.genesis_state}
    known.update(getattr(chain, "states", {}))
    for c in old:
        known.setdefault(c.boundary_state.height_basis, c.boundary_state)

    out = []
    for k in range(1, new_layout.s + 1):
        rng = new_layout.block_range(k)
        boundary = _replay_to(rng.start - 1, known, chain)
        blocks = tuple(chain.get(h) for h in rng)
        out.append(SegmentCopy(k, blocks, boundary, new_layout.version))
    return out


def segment_end_state(copy: SegmentCopy, reward_schedule: RewardSchedule) -> LedgerState:
    state = copy.boundary_state
    for b in copy.blocks:
        state = apply_block(state, b, reward_schedule)
    return state


class SegmentStore:
    """Segment copies keyed by (segment index, layout version).

    After a layout change the previous version stays resolvable for exactly one
    more block iteration, then it is pruned.
    """

    def __init__(self):
        self._current: dict[int, SegmentCopy] = {}
        self._previous: dict[int, SegmentCopy] = {}
        self._previous_until: int | None = None
        self.layout: SegmentLayout | None = None

    def install(self, copies: Sequence[SegmentCopy], layout: SegmentLayout, at_height: int) -> None:
        if self.layout is not None and self.layout.version != layout.version:
            self._previous = self._current
            self._previous_until = at_height + 1
        self._current = {c.segment_index: c for c in copies}
        self.layout = layout

    def prune(self, height: int) -> None:
        if self._previous_until is not None and height > self._previous_until:
            self._previous = {}
            self._previous_until = None

    def copies(self) -> list[SegmentCopy]:
        return [self._current[k] for k in sorted(self._current)]

    def resolve(self, segment_index: int, layout_version: tuple[int, int] | None = None) -> SegmentCopy:
        if layout_version is None or (self.layout and layout_version == self.layout.version):
            return self._current[segment_index]
        c = self._previous.get(segment_index)
        if c is None or c.layout_version != layout_version:
            raise KeyError((segment_index, layout_version))
        return c

    def versions(self) -> set[tuple[int, int]]:
        vs = {c.layout_version for c in self._current.values()}
        vs |= {c.layout_version for c in self._previous.values()}
        return vs


def write_segment_dump(copy: SegmentCopy, h: int, s: int, out: TextIO) -> None:
    out.write(f"segment {copy.segment_index} of {s} at {h}\n")
    for b in copy.blocks:
        out.write(b.serialize().hex() + "\n")


def read_segment_dump(text: str) -> tuple[int, int, int, list[Block]]:
    lines = text.strip().splitlines()
    parts = lines[0].split()
    if len(parts) != 6 or parts[0] != "segment" or parts[2] != "of" or parts[4] != "at":
        raise ValueError("bad segment dump header")
    k, s, h = int(parts[1]), int(parts[3]), int(parts[5])
    return k, s, h, [Block.deserialize(bytes.fromhex(ln)) for ln in lines[1:]]
