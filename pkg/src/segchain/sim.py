"""Discrete-iteration protocol engine.

One iteration creates one block and then runs the protocol steps that hang
off it: pending keep-alive, joins, proofs from the keepers of segment
(h mod s)+1, crediting of proofs from h-2, eliminations, growth and shrink.

PoW runs in one of two modes. In budget mode every identity spends a share of
its owner's power (in units of P per iteration) and the engine does the
accounting; no hashing. In hash mode nonces are actually searched, which is
only practical for tiny difficulties.
"""
from __future__ import annotations

import json
import math
from collections import Counter, defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable

from .analysis import optimal_placement
from .assignment import assign_storage, rank_occupation
from .chain import (
    Block,
    LedgerState,
    PendingNodeEntry,
    Transaction,
    block_credits,
    apply_block,
    genesis_block,
    header_hash,
)
from .config import ConfigError, SimConfig, StrategyKind
from .crypto import digest_int, hash_bytes, hash_combine
from .membership import (
    GROWTH_BATCH,
    Keepalive,
    NodeRecord,
    PendingQueue,
    PowRecord,
    Roster,
    Status,
    anchor_height,
    choose_occupation,
    eliminate_and_backfill,
    growth_trigger,
    keepalive_check,
    pow_meets_target,
    solve_pow,
    submit_join,
)
from .rng import Streams, derive_seed
from .segmentation import BlockStore, DegenerateLayout, SegmentLayout, SegmentStore, prover_segment, rebuild_segments
from .storage_proof import MissingSegment, build_proof, make_challenge, public_chain_view, verify_proof

HISTORY_CAP = 4096
EPS = 1e-9
EVENT_KINDS = ("block", "join", "churn", "proof_ok", "proof_fail", "eliminate", "backfill",
               "grow", "shrink", "reassign", "loss")


@dataclass
class JoinWork:
    key: bytes
    occupation: int
    honest: bool
    need: int          # P units, i.e. s at the time the work started
    done: float = 0.0


@dataclass(frozen=True)
class LastProof:
    """The most recent accepted proof and what a verifier needed at that height."""
    proof: object
    height: int
    s: int
    P: int
    roster: dict

    def chain_view(self, world: "World") -> dict:
        view = public_chain_view(world.headers[: self.height + 1], world.tx_counts[: self.height + 1],
                                 self.s, self.P, self.roster)
        view["pow_mode"] = world.config.pow_mode
        return view


@dataclass
class SimOutcome:
    config: dict
    iterations_run: int
    segments_lost: list[tuple[int, int]]
    roster_history: list[list[int]]
    reward_ledger: dict[str, dict[str, int]]
    event_log: list[dict]
    adversary_identities: list[int]
    adversary_identities_raw: list[int]
    final_s: int
    tip_hash: str
    state_hash: str

    def event_counts(self) -> dict[str, int]:
        c = Counter(e["kind"] for e in self.event_log)
        return {k: c.get(k, 0) for k in EVENT_KINDS}

    def summary(self) -> dict:
        return {
            "config": self.config,
            "iterations_run": self.iterations_run,
            "final_s": self.final_s,
            "segments_lost": [list(x) for x in self.segments_lost],
            "event_counts": self.event_counts(),
            "roster_history": self.roster_history,
            "reward_totals": reward_totals(self),
            "adversary_identities_mean": (
                sum(self.adversary_identities) / len(self.adversary_identities) if self.adversary_identities else 0.0
            ),
            "adversary_identities_max": max(self.adversary_identities, default=0),
            "adversary_identities_raw_max": max(self.adversary_identities_raw, default=0),
            "tip_hash": self.tip_hash,
            "state_hash": self.state_hash,
        }

    def summary_json(self) -> str:
        return json.dumps(self.summary(), sort_keys=True, indent=1) + "\n"

    def events_jsonl(self) -> str:
        return "".join(json.dumps(e, sort_keys=True, separators=(",", ":")) + "\n" for e in self.event_log)


def reward_totals(outcome: SimOutcome) -> dict[str, int]:
    return {k: sum(v.values()) for k, v in sorted(outcome.reward_ledger.items())}


class World:
    def __init__(self, config: SimConfig):
        self.config = config
        self.streams = Streams(config.seed)
        self.schedule = config.reward_schedule
        self.P = config.P
        self.events: list[dict] = []
        self.losses: list[tuple[int, int]] = []
        self.history: dict[bytes, list[float]] = {}
        self.spend: dict[bytes, float] = {}
        self.joins: list[JoinWork] = []
        self.ready_entries: list[PendingNodeEntry] = []
        self.attest: dict[int, list[tuple[bytes, int]]] = defaultdict(list)
        self.due_elims: dict[int, list[bytes]] = defaultdict(list)
        self.offline: set[bytes] = set()
        self.vanished = False
        self.rewards: dict[bytes, dict[str, int]] = {}
        self.adv_series: list[int] = []
        self.adv_series_raw: list[int] = []
        self.roster_history: list[list[int]] = []
        self.admit_order: dict[bytes, int] = {}
        self._admit_counter = 0
        self.queue = PendingQueue.empty(config.m)
        self.segments = SegmentStore()
        self.layout: SegmentLayout | None = None
        self.last_proof: LastProof | None = None

        strat = config.strategy
        self.adversary_on = strat.kind is not StrategyKind.NONE and config.adversary_power > 0
        self.target_T = strat.target_T
        self.adv_target = (
            config.adversary_identities if config.adversary_identities >= 0 else math.floor(config.adversary_power + EPS)
        )
        if not self.adversary_on:
            self.adv_target = 0

        self.accounts = [b"\x03" + self.streams.randbytes("keys", 32) for _ in range(config.accounts)]
        gstate = LedgerState({a: 1_000_000 for a in self.accounts}, 0)
        gblock = genesis_block()
        self.store = BlockStore(gstate, self.schedule)
        self.store.add(gblock, gstate)
        self.headers = [gblock.header]
        self.tx_counts = [0]
        self.state = gstate

        self.roster = Roster(config.m, config.s0)
        self._genesis_roster()

    # ------------------------------------------------------------------ setup

    @property
    def h(self) -> int:
        return len(self.headers) - 1

    @property
    def s(self) -> int:
        return self.roster.s

    def _new_key(self) -> bytes:
        return self.streams.randbytes("keys", 32)

    def _log(self, kind: str, **payload) -> None:
        self.events.append({"height": self.h, "kind": kind, "payload": payload})

    def _new_node(self, occ: int, honest: bool, history_len: int) -> NodeRecord:
        key = self._new_key()
        while key in self.roster.nodes:
            key = self._new_key()
        rec = NodeRecord(key, occ, power=1.0, honest=honest)
        self.roster.nodes[key] = rec
        self.history[key] = [1.0] * history_len
        return rec

    def _genesis_roster(self) -> None:
        cfg = self.config
        m, s0 = cfg.m, cfg.s0
        n0 = m * s0
        if self.adversary_on:
            ad0 = cfg.adversary_genesis if cfg.adversary_genesis >= 0 else min(self.adv_target, n0)
        else:
            ad0 = 0
        if ad0 > n0:
            raise ConfigError("adversary_genesis", f"exceeds genesis roster size {n0}")
        per_occ = [0] * m
        spill = 0
        for i, a in enumerate(optimal_placement(ad0, self.target_T) if ad0 else []):
            take = min(a + spill, s0)
            spill = a + spill - take
            per_occ[i] = take
        for i in range(m):
            if spill == 0:
                break
            extra = min(s0 - per_occ[i], spill)
            per_occ[i] += extra
            spill -= extra

        by_occ: dict[int, list[bytes]] = {}
        for i in range(1, m + 1):
            keys = []
            for j in range(s0):
                rec = self._new_node(i, honest=j >= per_occ[i - 1], history_len=s0)
                keys.append(rec.identity_key)
            by_occ[i] = keys
        self._reassign(by_occ, "genesis")

    # ------------------------------------------------------------ utilities

    def live(self, rec: NodeRecord) -> bool:
        return rec.status is not Status.ELIMINATED and rec.identity_key not in self.offline

    def doomed(self) -> set[bytes]:
        return {k for keys in self.due_elims.values() for k in keys}

    def adversary_identities(self, include_doomed: bool = False) -> list[NodeRecord]:
        """Live adversary identities; by default those that already failed a check
        and only await removal at h+2 are not counted as sustained."""
        doomed = set() if include_doomed else self.doomed()
        return [r for r in self.roster.nodes.values()
                if not r.honest and self.live(r) and r.identity_key not in doomed]

    def _admit(self, key: bytes) -> None:
        self.admit_order[key] = self._admit_counter
        self._admit_counter += 1

    def _reassign(self, by_occ: dict[int, list[bytes]], reason: str) -> None:
        bh = header_hash(self.headers[-1])
        table = assign_storage(by_occ, bh, epoch=self.h)
        for key in self.roster.grid.values():
            self.roster.nodes[key].assigned_segment = None
        self.roster.apply_assignment(table.grid)
        for key in table.grid.values():
            if key not in self.admit_order:
                self._admit(key)
        self._log("reassign", reason=reason, s=self.roster.s, bh=bh.hex())
        self._check_capture()

    def _check_capture(self) -> None:
        if not self.adversary_on or self.vanished or self.config.adversary_strategy is not StrategyKind.CAPTURE_AND_VANISH:
            return
        captured = [k for k in range(1, self.s + 1) if all(not r.honest for r in self.roster.keepers(k))]
        if not captured:
            return
        self.vanished = True
        for k in captured:
            self.losses.append((self.h, k))
            self._log("loss", segment=k, s=self.s)
        for r in self.adversary_identities(include_doomed=True):
            self.offline.add(r.identity_key)
        self.joins = [j for j in self.joins if j.honest]

    # ------------------------------------------------------------ power

    def _allocate_power(self) -> None:
        spend: dict[bytes, float] = {}
        for rec in self.roster.nodes.values():
            if rec.honest and self.live(rec):
                spend[rec.identity_key] = rec.power
        for j in self.joins:
            if j.honest:
                j.done += 1.0

        if self.adversary_on and not self.vanished:
            budget = self.config.adversary_power
            ids = self.adversary_identities()
            pending = sorted((r for r in ids if r.status is Status.PENDING), key=lambda r: self.admit_order.get(r.identity_key, 0))
            active = sorted((r for r in ids if r.status is Status.ACTIVE), key=lambda r: self.admit_order.get(r.identity_key, 0))
            in_progress = [j for j in self.joins if not j.honest]
            want = self.adv_target - len(ids) - len(in_progress)
            for _ in range(max(0, want)):
                occ = choose_occupation(self.queue, among=range(1, self.target_T + 1))
                in_progress.append(JoinWork(self._new_key(), occ, honest=False, need=self.s))
                self.joins.append(in_progress[-1])
            # pending keep-alives first, then join work, then active keepers
            for r in pending:
                give = min(1.0, budget)
                spend[r.identity_key] = give
                budget -= give
            for j in in_progress:
                give = min(1.0, budget)
                j.done += give
                budget -= give
            for r in active:
                give = min(1.0, budget)
                spend[r.identity_key] = give
                budget -= give

        self.spend = spend
        for rec in self.roster.nodes.values():
            if rec.status is Status.ELIMINATED:
                continue
            hist = self.history.setdefault(rec.identity_key, [])
            hist.append(spend.get(rec.identity_key, 0.0))
            if len(hist) > HISTORY_CAP:
                del hist[: len(hist) - HISTORY_CAP]

    def _pending_keepalive(self) -> None:
        for key in self.queue.keys():
            rec = self.roster.nodes[key]
            if keepalive_check(rec, self.spend.get(key, 0.0), 1.0) is Keepalive.DROP:
                self.queue = self.queue.remove(key)
                rec.status = Status.ELIMINATED
                self._log("eliminate", key=key.hex(), stage="pending", honest=rec.honest)

    # ------------------------------------------------------------ mining

    def _pick_creator(self, prev_hash: bytes) -> tuple[bytes, int, int]:
        eligible = sorted(
            (k, self.spend.get(k, 0.0))
            for k in self.roster.grid.values()
            if k not in self.offline and self.spend.get(k, 0.0) > 0
        )
        if not eligible:
            return bytes(32), 1, 0
        if self.config.pow_mode == "hash":
            best = None
            for key, power in eligible:
                attempts = max(1, round(power * self.config.hash_attempts_per_P))
                for nonce in range(attempts):
                    d = hash_combine(prev_hash, key + nonce.to_bytes(4, "big"))
                    if best is None or d < best[0]:
                        best = (d, key, nonce)
            diff = min((1 << 256) // max(digest_int(best[0]), 1), 2**32 - 1)
            return best[1], diff, best[2]
        rng = self.streams["mining"]
        total = sum(p for _, p in eligible)
        x = rng.random() * total
        acc = 0.0
        for key, p in eligible:
            acc += p
            if x < acc:
                return key, self.P, 0
        return eligible[-1][0], self.P, 0

    def _make_transactions(self) -> list[Transaction]:
        rng = self.streams["txs"]
        bal = {a: self.state.balance(a) for a in self.accounts}
        txs = []
        for n in range(self.config.txs_per_block):
            funded = [a for a in self.accounts if bal[a] > 20]
            if not funded:
                break
            src = funded[rng.randrange(len(funded))]
            dst = self.accounts[rng.randrange(len(self.accounts))]
            fee = rng.randrange(0, 11)
            amount = rng.randint(1, min(bal[src] - fee, 1000))
            bal[src] -= amount + fee
            bal[dst] += amount
            txs.append(Transaction(src, dst, amount, fee, (self.h + 1) * 1000 + n))
        return txs

    def _mine(self) -> Block:
        prev = header_hash(self.headers[-1])
        h = self.h + 1
        creator, diff, nonce = self._pick_creator(prev)
        credited = [(k, seg) for k, seg in self.attest.pop(h, []) if self.roster.nodes[k].status is not Status.ELIMINATED]
        block = Block.create(
            height=h,
            prev_hash=prev,
            transactions=self._make_transactions(),
            pending_section=self.ready_entries,
            storage_attestations=credited,
            creator=creator,
            pow_difficulty=diff,
            pow_nonce=nonce,
        )
        self.ready_entries = []
        self.state = apply_block(self.state, block, self.schedule)
        self.store.add(block, self.state)
        self.headers.append(block.header)
        self.tx_counts.append(len(block.transactions))
        self._book_rewards(block, creator)
        self._log("block", creator=creator.hex(), txs=len(block.transactions), hash=block.hash.hex(),
                  pending=len(block.pending_section), credited=len(credited))
        return block

    def _book_rewards(self, block: Block, creator: bytes) -> None:
        sub = self.schedule.subsidy(block.height)
        minted, fees = block_credits(block, self.schedule)
        for key, amount in minted.items():
            if key == creator and sub:
                self._credit(key, "subsidy", sub)
                amount -= sub
            if amount:
                self._credit(key, "storage", amount)
        for key, amount in fees.items():
            self._credit(key, "fees", amount)

    def _credit(self, key: bytes, kind: str, amount: int) -> None:
        slot = self.rewards.setdefault(key, {"subsidy": 0, "storage": 0, "fees": 0})
        slot[kind] += amount

    # ------------------------------------------------------------ membership

    def _complete_joins(self) -> None:
        h = self.h
        anchor = header_hash(self.headers[anchor_height(h, self.s)])
        still = []
        for j in self.joins:
            if j.done + EPS < j.need:
                still.append(j)
                continue
            pow = PowRecord(anchor, j.key, self.P * j.need, bytes(32), j.occupation)
            taken = {k for k, r in self.roster.nodes.items() if r.status is not Status.ELIMINATED}
            try:
                self.queue = submit_join(self.queue, pow, j.need, self.P, anchor, taken)
            except Exception as exc:  # recorded, the work is lost
                self._log("join", key=j.key.hex(), ok=False, error=type(exc).__name__)
                continue
            rec = NodeRecord(j.key, j.occupation, 1.0, j.honest)
            self.roster.nodes[j.key] = rec
            self.history[j.key] = [1.0] * j.need
            self._admit(j.key)
            self.ready_entries.append(PendingNodeEntry(j.occupation, j.key, pow.nonce))
            self._log("join", key=j.key.hex(), occupation=j.occupation, honest=j.honest, ok=True)
        self.joins = still

    def _eliminations(self) -> None:
        h = self.h
        due = self.due_elims.pop(h, [])
        for key in due:
            rec = self.roster.nodes[key]
            if rec.status is Status.ELIMINATED:
                continue
            if rec.status is Status.PENDING:
                self.queue = self.queue.remove(key)
                rec.status = Status.ELIMINATED
                self._log("eliminate", key=key.hex(), stage="pending", honest=rec.honest)
                continue
            occ, seg = rec.occupation, rec.assigned_segment
            if not self.queue[occ] and self.roster.s == 1:
                self.due_elims[h + 1].append(key)
                continue
            self.roster, self.queue, delta = eliminate_and_backfill(self.roster, rec, self.queue)
            self._log("eliminate", key=key.hex(), stage="active", honest=rec.honest, occupation=occ, segment=seg)
            if delta == 0:
                newcomer = self.roster.grid[(occ, seg)]
                if newcomer not in self.admit_order:
                    self._admit(newcomer)
                self._log("backfill", key=newcomer.hex(), occupation=occ, segment=seg)
                self._check_capture()
            else:
                self._log("shrink", s=self.roster.s, dissolved=seg)
                self._reassign(self.roster.active_by_occupation(), "shrink")

    def _growth(self) -> None:
        if not growth_trigger(self.queue) or self.h < self.s + GROWTH_BATCH:
            return
        taken, self.queue = self.queue.take_front(GROWTH_BATCH)
        by_occ = self.roster.active_by_occupation()
        for i, keys in enumerate(taken, start=1):
            by_occ[i].extend(keys)
        self.roster.s += GROWTH_BATCH
        self._log("grow", s=self.roster.s)
        self._reassign(by_occ, "grow")

    def _churn(self) -> None:
        rng = self.streams["churn"]
        if self.config.honest_churn <= 0 or rng.random() >= self.config.honest_churn:
            return
        cands = sorted(k for k in self.roster.grid.values() if self.roster.nodes[k].honest and k not in self.offline)
        if cands:
            key = cands[rng.randrange(len(cands))]
            self.offline.add(key)
            self._log("churn", key=key.hex())

    def _start_honest_joins(self) -> None:
        rng = self.streams["joins"]
        rate = self.config.honest_join_rate
        arrivals = int(rate) + (1 if rng.random() < rate - int(rate) else 0)
        honest_live = sum(1 for r in self.roster.nodes.values() if r.honest and self.live(r))
        room = math.floor(self.config.honest_power + EPS) - honest_live - sum(1 for j in self.joins if j.honest)
        for _ in range(min(arrivals, max(0, room))):
            occ = choose_occupation(self.queue)
            self.joins.append(JoinWork(self._new_key(), occ, honest=True, need=self.s))

    # ------------------------------------------------------------ proofs

    def _relayout(self) -> None:
        try:
            layout = SegmentLayout(self.h, self.s)
        except DegenerateLayout:
            self.layout = None
            return
        old = self.segments.copies()
        if self.layout is not None and old and self.layout.same_partition(layout):
            if self.layout.version != layout.version:
                copies = [replace(c, layout_version=layout.version) for c in old]
                self.segments.install(copies, layout, self.h)
        else:
            self.segments.install(rebuild_segments(old, self.store, layout), layout, self.h)
        self.segments.prune(self.h)
        self.layout = layout

    def window_rate(self, key: bytes) -> float:
        hist = self.history.get(key, [])[-self.s:]
        return sum(hist) / len(hist) if hist else 0.0

    def _pow_for(self, rec: NodeRecord, anchor: bytes) -> PowRecord | None:
        need = self.P * self.s
        rate = self.window_rate(rec.identity_key)
        hist = self.history.get(rec.identity_key, [])[-self.s:]
        if keepalive_check(rec, sum(hist), 1.0, window=max(len(hist), 1)) is Keepalive.DROP:
            claimed = max(1, math.floor(need * rate + EPS))
            return PowRecord(anchor, rec.identity_key, claimed, bytes(32))
        if self.config.pow_mode == "hash":
            return solve_pow(anchor, rec.identity_key, need)
        return PowRecord(anchor, rec.identity_key, need, self.h.to_bytes(32, "big"))

    def _budget_check(self, pw: PowRecord) -> bool:
        return pw.claimed_difficulty <= self.P * self.s * self.window_rate(pw.identity_key) + EPS * self.P * self.s

    def _fail(self, key: bytes, segment: int, reason: str) -> None:
        self._log("proof_fail", key=key.hex(), segment=segment, reason=reason)
        self.due_elims[self.h + 2].append(key)

    def _proofs(self) -> None:
        h, s = self.h, self.s
        k = prover_segment(h, s)
        bh = header_hash(self.headers[-1])
        anchor = header_hash(self.headers[anchor_height(h, s)])
        roster_map = {key: (occ, seg) for (occ, seg), key in self.roster.grid.items()}
        check = pow_meets_target if self.config.pow_mode == "hash" else self._budget_check
        # while h < s segment k holds no blocks yet; its keepers still owe the PoW
        segment = self.segments.resolve(k) if self.layout is not None else None
        for i in range(1, self.config.m + 1):
            rec = self.roster.keeper(i, k)
            key = rec.identity_key
            if key in self.offline:
                self._fail(key, k, "Absent")
                continue
            pw = self._pow_for(rec, anchor)
            if segment is None:
                if pw is not None and pw.claimed_difficulty >= self.P * s and check(pw):
                    self._log("proof_ok", key=key.hex(), segment=k, storage=False)
                else:
                    self._fail(key, k, "BadPow")
                continue
            try:
                proof = build_proof(segment, make_challenge(segment, bh, key, i), pw)
            except MissingSegment:
                self._fail(key, k, "MissingSegment")
                continue
            verdict = verify_proof(proof, self.headers, bh, roster_map, s=s, P=self.P,
                                   tx_counts=self.tx_counts, pow_check=check)
            if verdict:
                self.attest[h + 2].append((key, k))
                self._log("proof_ok", key=key.hex(), segment=k, storage=True)
                self.last_proof = LastProof(proof, h, s, self.P, roster_map)
            else:
                self._fail(key, k, verdict.reason.value)

    # ------------------------------------------------------------ driver

    def step(self) -> None:
        self._allocate_power()
        self._pending_keepalive()
        self._mine()
        self._complete_joins()
        self._eliminations()
        self._growth()
        self._relayout()
        self._proofs()
        self._churn()
        self._start_honest_joins()
        self.adv_series.append(len(self.adversary_identities()))
        self.adv_series_raw.append(len(self.adversary_identities(include_doomed=True)))
        if not self.roster_history or self.roster_history[-1][1] != self.s:
            self.roster_history.append([self.h, self.s, len(self.roster.grid),
                                        sum(1 for key in self.roster.grid.values() if not self.roster.nodes[key].honest)])

    def outcome(self) -> SimOutcome:
        return SimOutcome(
            config=self.config.to_dict(),
            iterations_run=self.h,
            segments_lost=list(self.losses),
            roster_history=list(self.roster_history),
            reward_ledger={k.hex(): dict(v) for k, v in sorted(self.rewards.items())},
            event_log=list(self.events),
            adversary_identities=list(self.adv_series),
            adversary_identities_raw=list(self.adv_series_raw),
            final_s=self.s,
            tip_hash=header_hash(self.headers[-1]).hex(),
            state_hash=hash_bytes(self.state.serialize()).hex(),
        )


def run_iteration(world: World) -> World:
    world.step()
    return world


def run_simulation(config: SimConfig, observer: Callable[[World], None] | None = None) -> SimOutcome:
    world = World(config)
    for _ in range(config.iterations):
        world.step()
        if observer is not None:
            observer(world)
    return world.outcome()


def check_world(world: World) -> list[str]:
    """Grid and layout invariants; an empty list means everything holds."""
    problems = []
    if not world.roster.is_exact_grid():
        problems.append(f"roster is not an exact {world.config.m}x{world.s} grid at h={world.h}")
    if world.layout is not None:
        covered = [h for r in world.layout.ranges() for h in r]
        if covered != list(range(1, world.h + 1)):
            problems.append(f"layout does not tile [1,{world.h}]")
        if world.layout.s != world.s:
            problems.append("layout s differs from roster s")
    elif world.h >= world.s:
        problems.append("layout missing")
    return problems


def _trial_summary(config: SimConfig) -> dict:
    return run_simulation(config).summary()


def run_trials(config: SimConfig, trials: int, workers: int = 1) -> list[dict]:
    """Independent replicas with seeds split from ``config.seed``; order and
    content do not depend on ``workers``."""
    configs = [config if trials == 1 else replace(config, seed=derive_seed(config.seed, f"trial/{i}"))
               for i in range(trials)]
    if workers > 1 and trials > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(_trial_summary, configs))
    return [_trial_summary(c) for c in configs]


# ---------------------------------------------------------------- epochs

def _epoch_chunk(args) -> int:
    seed, start, stop, occupations, adversarial = args
    hits = 0
    prefix = seed.to_bytes(8, "big")
    for e in range(start, stop):
        bh = hash_bytes(prefix + e.to_bytes(8, "big"))
        for keys in occupations:
            if rank_occupation(keys, bh)[0] not in adversarial:
                break
        else:
            hits += 1
    return hits


def epoch_capture_rate(
    m: int, s: int, AD: int, epochs: int, seed: int, workers: int = 1, chunk: int = 50_000
) -> tuple[float, int]:
    """Capture rate of segment 1 over independent reassignment epochs.

    The adversary's AD identities are spread by ``optimal_placement`` over the m
    occupations; every epoch ranks each occupation's identities against a fresh
    block hash exactly as the engine does and checks whether all m keepers of
    segment 1 are adversarial.
    """
    streams = Streams(seed)
    split = optimal_placement(AD, m)
    occupations = []
    adversarial = set()
    for i in range(m):
        keys = [streams.randbytes("epoch-keys", 32) for _ in range(s)]
        adversarial.update(keys[: split[i]])
        occupations.append(keys)
    jobs = [(seed, a, min(a + chunk, epochs), occupations, frozenset(adversarial)) for a in range(0, epochs, chunk)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            hits = sum(ex.map(_epoch_chunk, jobs))
    else:
        hits = sum(map(_epoch_chunk, jobs))
    return hits / epochs, hits
