"""Blocks, transactions and the block-as-input ledger state machine.

All wire formats are fixed width and big-endian:

    Transaction       82 bytes  sender(33) recipient(33) amount(8) fee(4) nonce(4)
    StateRecord       41 bytes  address(33) balance(8)
    PendingNodeEntry  68 bytes  occupation(4) identity_key(32) pow_nonce(32)
    BlockHeader      112 bytes  height(4) prev_hash(32) tx_merkle_root(32)
                                pending_merkle_root(32) pow_difficulty(4)
                                timestamp(4) pow_nonce(4)
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

from .crypto import hash_bytes, merkle_root

ADDRESS_SIZE = 33
KEY_SIZE = 32
TX_SIZE = 82
STATE_RECORD_SIZE = 41
PENDING_ENTRY_SIZE = 68
HEADER_SIZE = 112
ATTESTATION_SIZE = 36

U64_MAX = 2**64 - 1
ZERO_DIGEST = bytes(32)

_TX = struct.Struct(">33s33sQII")
_HEADER = struct.Struct(">I32s32s32sIII")
_PENDING = struct.Struct(">I32s32s")
_RECORD = struct.Struct(">33sQ")
_ATTEST = struct.Struct(">32sI")


class ChainError(Exception):
    pass


class InvalidTransaction(ChainError):
    def __init__(self, index: int, reason: str = "overdraw"):
        super().__init__(f"transaction {index} invalid: {reason}")
        self.index = index
        self.reason = reason


class HeightMismatch(ChainError):
    pass


class ReplayError(ChainError):
    """derive_state failure, tagged with the offending block height."""

    def __init__(self, height: int, cause: ChainError):
        super().__init__(f"block {height}: {cause}")
        self.height = height
        self.cause = cause


def address_of_key(identity_key: bytes) -> bytes:
    """Wallet address credited for a node identity key (0x02 prefix, like a compressed pubkey)."""
    return b"\x02" + identity_key


@dataclass(frozen=True)
class Transaction:
    sender: bytes
    recipient: bytes
    amount: int
    fee: int = 0
    nonce: int = 0

    def __post_init__(self):
        if len(self.sender) != ADDRESS_SIZE or len(self.recipient) != ADDRESS_SIZE:
            raise ValueError("addresses must be 33 bytes")
        if not (0 <= self.amount <= U64_MAX and 0 <= self.fee < 2**32 and 0 <= self.nonce < 2**32):
            raise ValueError("transaction field out of range")
        if self.amount + self.fee > U64_MAX:
            raise ValueError("amount + fee overflows")

    def serialize(self) -> bytes:
        return _TX.pack(self.sender, self.recipient, self.amount, self.fee, self.nonce)

    @classmethod
    def deserialize(cls, raw: bytes) -> "Transaction":
        if len(raw) != TX_SIZE:
            raise ValueError(f"transaction must be {TX_SIZE} bytes, got {len(raw)}")
        return cls(*_TX.unpack(raw))

    @property
    def txid(self) -> bytes:
        return hash_bytes(self.serialize())


@dataclass(frozen=True)
class StateRecord:
    address: bytes
    balance: int

    def serialize(self) -> bytes:
        return _RECORD.pack(self.address, self.balance)


@dataclass(frozen=True)
class LedgerState:
    """Immutable address -> balance map at a given height.

    Zero balances are dropped so that equal maps have one canonical form.
    """

    balances: Mapping[bytes, int] = field(default_factory=dict)
    height_basis: int = 0

    def __post_init__(self):
        clean = {}
        for addr, bal in self.balances.items():
            if bal < 0:
                raise ValueError("negative balance")
            if bal > U64_MAX:
                raise ValueError("balance exceeds 8 bytes")
            if bal:
                clean[addr] = bal
        object.__setattr__(self, "balances", MappingProxyType(clean))

    def __eq__(self, other):
        if not isinstance(other, LedgerState):
            return NotImplemented
        return self.height_basis == other.height_basis and dict(self.balances) == dict(other.balances)

    def __hash__(self):
        return hash(self.serialize())

    def balance(self, address: bytes) -> int:
        return self.balances.get(address, 0)

    def total_supply(self) -> int:
        return sum(self.balances.values())

    def records(self) -> list[StateRecord]:
        return [StateRecord(a, self.balances[a]) for a in sorted(self.balances)]

    def serialize(self) -> bytes:
        body = b"".join(r.serialize() for r in self.records())
        return struct.pack(">QI", self.height_basis, len(self.balances)) + body


@dataclass(frozen=True)
class PendingNodeEntry:
    occupation: int
    identity_key: bytes
    pow_nonce: bytes = bytes(32)

    def serialize(self) -> bytes:
        return _PENDING.pack(self.occupation, self.identity_key, self.pow_nonce)

    @classmethod
    def deserialize(cls, raw: bytes) -> "PendingNodeEntry":
        return cls(*_PENDING.unpack(raw))


@dataclass(frozen=True)
class BlockHeader:
    height: int
    prev_hash: bytes
    tx_merkle_root: bytes
    pending_merkle_root: bytes
    pow_difficulty: int = 1
    pow_nonce: int = 0
    timestamp: int = 0

    def serialize(self) -> bytes:
        return _HEADER.pack(
            self.height,
            self.prev_hash,
            self.tx_merkle_root,
            self.pending_merkle_root,
            self.pow_difficulty,
            self.timestamp,
            self.pow_nonce,
        )

    @classmethod
    def deserialize(cls, raw: bytes) -> "BlockHeader":
        if len(raw) != HEADER_SIZE:
            raise ValueError(f"header must be {HEADER_SIZE} bytes, got {len(raw)}")
        h, prev, txr, pr, diff, ts, nonce = _HEADER.unpack(raw)
        return cls(h, prev, txr, pr, pow_difficulty=diff, pow_nonce=nonce, timestamp=ts)


def header_hash(header: BlockHeader) -> bytes:
    return hash_bytes(header.serialize())


def tx_root(transactions: Sequence[Transaction]) -> bytes:
    if not transactions:
        return ZERO_DIGEST
    return merkle_root([t.txid for t in transactions])


def section_root(
    creator: bytes,
    pending: Sequence[PendingNodeEntry],
    attestations: Sequence[tuple[bytes, int]],
) -> bytes:
    """Commitment to the creator key, pending-node section and storage attestations.

    The creator key is the first leaf, in the spirit of a coinbase.
    """
    leaves = [hash_bytes(creator)]
    leaves += [hash_bytes(e.serialize()) for e in pending]
    leaves += [hash_bytes(_ATTEST.pack(k, seg)) for k, seg in attestations]
    return merkle_root(leaves)


@dataclass(frozen=True)
class Block:
    header: BlockHeader
    transactions: tuple[Transaction, ...] = ()
    pending_section: tuple[PendingNodeEntry, ...] = ()
    storage_attestations: tuple[tuple[bytes, int], ...] = ()
    creator: bytes = bytes(32)

    @classmethod
    def create(
        cls,
        height: int,
        prev_hash: bytes,
        transactions: Iterable[Transaction] = (),
        pending_section: Iterable[PendingNodeEntry] = (),
        storage_attestations: Iterable[tuple[bytes, int]] = (),
        creator: bytes = bytes(32),
        pow_difficulty: int = 1,
        pow_nonce: int = 0,
    ) -> "Block":
        txs = tuple(transactions)
        pend = tuple(pending_section)
        att = tuple(storage_attestations)
        header = BlockHeader(
            height=height,
            prev_hash=prev_hash,
            tx_merkle_root=tx_root(txs),
            pending_merkle_root=section_root(creator, pend, att),
            pow_difficulty=pow_difficulty,
            pow_nonce=pow_nonce,
            timestamp=height,
        )
        return cls(header, txs, pend, att, creator)

    @property
    def height(self) -> int:
        return self.header.height

    @property
    def hash(self) -> bytes:
        return header_hash(self.header)

    def is_consistent(self) -> bool:
        return (
            self.header.tx_merkle_root == tx_root(self.transactions)
            and self.header.pending_merkle_root
            == section_root(self.creator, self.pending_section, self.storage_attestations)
        )

    def serialize(self) -> bytes:
        parts = [
            self.header.serialize(),
            struct.pack(">III", len(self.transactions), len(self.pending_section), len(self.storage_attestations)),
            self.creator,
        ]
        parts += [t.serialize() for t in self.transactions]
        parts += [e.serialize() for e in self.pending_section]
        parts += [_ATTEST.pack(k, seg) for k, seg in self.storage_attestations]
        return b"".join(parts)

    @classmethod
    def deserialize(cls, raw: bytes) -> "Block":
        header = BlockHeader.deserialize(raw[:HEADER_SIZE])
        ntx, npend, natt = struct.unpack_from(">III", raw, HEADER_SIZE)
        off = HEADER_SIZE + 12
        creator = raw[off : off + KEY_SIZE]
        off += KEY_SIZE
        txs = []
        for _ in range(ntx):
            txs.append(Transaction.deserialize(raw[off : off + TX_SIZE]))
            off += TX_SIZE
        pend = []
        for _ in range(npend):
            pend.append(PendingNodeEntry.deserialize(raw[off : off + PENDING_ENTRY_SIZE]))
            off += PENDING_ENTRY_SIZE
        att = []
        for _ in range(natt):
            att.append(_ATTEST.unpack_from(raw, off))
            off += ATTESTATION_SIZE
        if off != len(raw):
            raise ValueError("trailing bytes after block")
        return cls(header, tuple(txs), tuple(pend), tuple(att), creator)


@dataclass(frozen=True)
class RewardSchedule:
    initial_subsidy: int = 50_000
    halving_interval: int = 210
    storage_reward_pool: int = 8_000

    def subsidy(self, height: int) -> int:
        shift = height // self.halving_interval
        return self.initial_subsidy >> shift if shift < 64 else 0

    def storage_pool(self, height: int) -> int:
        shift = height // self.halving_interval
        return self.storage_reward_pool >> shift if shift < 64 else 0


def split_reward(pool: int, keys: Sequence[bytes]) -> dict[bytes, int]:
    """Equal integer split; the remainder goes to the lowest identity key."""
    if not keys or pool <= 0:
        return {}
    uniq = sorted(set(keys))
    share, rem = divmod(pool, len(uniq))
    out = {k: share for k in uniq}
    out[uniq[0]] += rem
    return out


def block_credits(block: Block, reward_schedule: RewardSchedule) -> tuple[dict[bytes, int], dict[bytes, int]]:
    """(minted, fees) credited by ``block``, keyed by identity key.

    While the system pool is positive it pays the storage keepers and fees go
    to the creator; once it reaches zero the block's fees become the keepers' pool.
    """
    h = block.height
    fees = sum(t.fee for t in block.transactions)
    minted: dict[bytes, int] = {}
    fee_credit: dict[bytes, int] = {}
    sub = reward_schedule.subsidy(h)
    if sub:
        minted[block.creator] = sub
    keepers = [k for k, _ in block.storage_attestations]
    pool = reward_schedule.storage_pool(h)
    if pool:
        for k, v in split_reward(pool, keepers).items():
            minted[k] = minted.get(k, 0) + v
        if fees:
            fee_credit[block.creator] = fees
    elif keepers:
        fee_credit = split_reward(fees, keepers)
    elif fees:
        fee_credit[block.creator] = fees
    return minted, fee_credit


def apply_block(state: LedgerState, block: Block, reward_schedule: RewardSchedule) -> LedgerState:
    if state.height_basis + 1 != block.height:
        raise HeightMismatch(f"state at {state.height_basis} cannot take block {block.height}")
    bal = dict(state.balances)
    for i, tx in enumerate(block.transactions):
        cost = tx.amount + tx.fee
        have = bal.get(tx.sender, 0)
        if have < cost:
            raise InvalidTransaction(i)
        bal[tx.sender] = have - cost
        bal[tx.recipient] = bal.get(tx.recipient, 0) + tx.amount
    minted, fees = block_credits(block, reward_schedule)
    for credits in (minted, fees):
        for key, amt in credits.items():
            addr = address_of_key(key)
            bal[addr] = bal.get(addr, 0) + amt
    return LedgerState(bal, block.height)


def minted_amount(block: Block, reward_schedule: RewardSchedule) -> int:
    minted, _ = block_credits(block, reward_schedule)
    return sum(minted.values())


def derive_state(genesis: LedgerState, blocks: Iterable[Block], reward_schedule: RewardSchedule) -> LedgerState:
    state = genesis
    for b in blocks:
        try:
            state = apply_block(state, b, reward_schedule)
        except ChainError as exc:
            raise ReplayError(b.height, exc) from exc
    return state


def genesis_block() -> Block:
    return Block.create(height=0, prev_hash=ZERO_DIGEST)
