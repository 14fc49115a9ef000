"""Challenge indices, Proof-of-Storage construction and header-only verification."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

from .chain import BlockHeader, Transaction, header_hash
from .crypto import LEFT, RIGHT, MerkleBranch, MerkleTree, digest_int, hash_combine, merkle_branch, verify_branch
from .membership import PowRecord, anchor_height
from .segmentation import DegenerateLayout, SegmentCopy, SegmentLayout, prover_segment


class EmptySegment(ValueError):
    pass


class OrdinalOutOfRange(IndexError):
    pass


class MissingSegment(LookupError):
    pass


class Reason(str, enum.Enum):
    OK = "OK"
    BAD_POW = "BadPow"
    WRONG_ORDINAL = "WrongOrdinal"
    BAD_BRANCH = "BadBranch"
    WRONG_PROVER = "WrongProver"


@dataclass(frozen=True)
class Verdict:
    reason: Reason

    def __bool__(self) -> bool:
        return self.reason is Reason.OK


@dataclass(frozen=True)
class StorageChallenge:
    segment_index: int
    challenged_tx_ordinal: int
    bh: bytes
    identity_key: bytes
    occupation: int


@dataclass(frozen=True)
class ProofOfStorage:
    prover: bytes
    occupation: int
    containing_block_height: int
    transaction: Transaction
    branch: MerkleBranch
    pow: PowRecord

    def to_json(self) -> dict:
        return {
            "prover": self.prover.hex(),
            "occupation": self.occupation,
            "block_height": self.containing_block_height,
            "transaction": self.transaction.serialize().hex(),
            "branch": {
                "leaf_index": self.branch.leaf_index,
                "siblings": [[d.hex(), side] for d, side in self.branch.siblings],
            },
            "pow": self.pow.to_json(),
        }

    @classmethod
    def from_json(cls, d: Mapping) -> "ProofOfStorage":
        br = d["branch"]
        return cls(
            prover=bytes.fromhex(d["prover"]),
            occupation=int(d["occupation"]),
            containing_block_height=int(d["block_height"]),
            transaction=Transaction.deserialize(bytes.fromhex(d["transaction"])),
            branch=MerkleBranch(
                int(br["leaf_index"]), tuple((bytes.fromhex(h), side) for h, side in br["siblings"])
            ),
            pow=PowRecord.from_json(d["pow"]),
        )


def challenge_index(bh: bytes, identity_key: bytes, occupation: int, seg_tx_count: int) -> int:
    """CI = (BH hash ID hash i) mod len(k) + 1, hash chained left to right."""
    if seg_tx_count < 1:
        raise EmptySegment("segment holds no transactions")
    d = hash_combine(hash_combine(bh, identity_key), occupation.to_bytes(4, "big"))
    return digest_int(d) % seg_tx_count + 1


def locate_in_counts(counts: Sequence[int], ordinal: int) -> tuple[int, int]:
    """(block offset, 1-based index within block) of a segment-wide ordinal."""
    if ordinal < 1:
        raise OrdinalOutOfRange(ordinal)
    before = 0
    for off, c in enumerate(counts):
        if ordinal <= before + c:
            return off, ordinal - before
        before += c
    raise OrdinalOutOfRange(f"ordinal {ordinal} > {before}")


def locate_ordinal(segment: SegmentCopy, ordinal: int) -> tuple[int, int]:
    off, idx = locate_in_counts(segment.tx_counts(), ordinal)
    return segment.blocks[off].height, idx


def make_challenge(segment: SegmentCopy, bh: bytes, identity_key: bytes, occupation: int) -> StorageChallenge:
    ci = challenge_index(bh, identity_key, occupation, segment.tx_total())
    return StorageChallenge(segment.segment_index, ci, bh, identity_key, occupation)


def build_proof(segment: SegmentCopy, challenge: StorageChallenge, pow: PowRecord) -> ProofOfStorage:
    if not segment.holds(challenge.challenged_tx_ordinal):
        raise MissingSegment(f"transaction {challenge.challenged_tx_ordinal} of segment {segment.segment_index} not held")
    height, idx = locate_ordinal(segment, challenge.challenged_tx_ordinal)
    block = segment.blocks[height - segment.first_height]
    tree = MerkleTree.build([t.txid for t in block.transactions])
    return ProofOfStorage(
        prover=challenge.identity_key,
        occupation=challenge.occupation,
        containing_block_height=height,
        transaction=block.transactions[idx - 1],
        branch=merkle_branch(tree, idx),
        pow=pow,
    )


def _expected_depth(n: int) -> int:
    return (n - 1).bit_length() if n > 1 else 0


def verify_proof(
    proof: ProofOfStorage,
    headers: Sequence[BlockHeader],
    bh: bytes,
    roster: Mapping[bytes, tuple[int, int]],
    *,
    s: int,
    P: int,
    tx_counts: Sequence[int],
    pow_check: Callable[[PowRecord], bool] | None = None,
) -> Verdict:
    """Check a proof using only headers, public per-block tx counts and the roster.

    ``headers[i]`` and ``tx_counts[i]`` describe height i (0 is genesis); the
    proof is for the latest height. ``roster`` maps identity key ->
    (occupation, segment). ``pow_check`` adds the mode-specific PoW test
    (hash target, or the engine's spending ledger).
    """
    h = len(headers) - 1
    entry = roster.get(proof.prover)
    if entry is None or entry[0] != proof.occupation or entry[1] != prover_segment(h, s):
        return Verdict(Reason.WRONG_PROVER)

    pw = proof.pow
    anchor = header_hash(headers[anchor_height(h, s)])
    if (
        pw.identity_key != proof.prover
        or pw.claimed_difficulty < P * s
        or pw.prev_block_ref != anchor
        or (pow_check is not None and not pow_check(pw))
    ):
        return Verdict(Reason.BAD_POW)

    try:
        layout = SegmentLayout(h, s)
    except DegenerateLayout:
        return Verdict(Reason.WRONG_ORDINAL)
    rng = layout.block_range(entry[1])
    height = proof.containing_block_height
    if height not in rng or not 1 <= proof.branch.leaf_index <= tx_counts[height]:
        return Verdict(Reason.WRONG_ORDINAL)
    total = sum(tx_counts[x] for x in rng)
    if total < 1:
        return Verdict(Reason.WRONG_ORDINAL)
    claimed = sum(tx_counts[x] for x in range(rng.start, height)) + proof.branch.leaf_index
    if claimed != challenge_index(bh, proof.prover, proof.occupation, total):
        return Verdict(Reason.WRONG_ORDINAL)

    branch = proof.branch
    n = tx_counts[height]
    if (
        len(branch.siblings) != _expected_depth(n)
        or branch.position() != branch.leaf_index - 1
        or any(side not in (LEFT, RIGHT) for _, side in branch.siblings)
        or not verify_branch(proof.transaction.txid, branch, headers[height].tx_merkle_root)
    ):
        return Verdict(Reason.BAD_BRANCH)
    return Verdict(Reason.OK)


def public_chain_view(headers: Sequence[BlockHeader], tx_counts: Sequence[int], s: int, P: int,
                      roster: Mapping[bytes, tuple[int, int]]) -> dict:
    """JSON form of what a verifier holds: headers, tx counts, s, P and the roster."""
    return {
        "s": s,
        "P": P,
        "headers": [{"header": hd.serialize().hex(), "tx_count": c} for hd, c in zip(headers, tx_counts)],
        "roster": {k.hex(): [occ, seg] for k, (occ, seg) in sorted(roster.items())},
    }


def load_chain_view(d: Mapping) -> tuple[list[BlockHeader], list[int], int, int, dict[bytes, tuple[int, int]]]:
    headers = [BlockHeader.deserialize(bytes.fromhex(e["header"])) for e in d["headers"]]
    counts = [int(e["tx_count"]) for e in d["headers"]]
    roster = {bytes.fromhex(k): (int(v[0]), int(v[1])) for k, v in d["roster"].items()}
    for i, hd in enumerate(headers):
        if hd.height != i:
            raise ValueError(f"header {i} claims height {hd.height}")
    return headers, counts, int(d["s"]), int(d["P"]), roster


def all_ordinals(segment: SegmentCopy) -> list[tuple[int, int]]:
    return [(b.height, i) for b in segment.blocks for i in range(1, len(b.transactions) + 1)]
