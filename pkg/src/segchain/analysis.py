"""Capture probabilities (closed form and Monte Carlo) and the sizing models
for segment count and per-node storage."""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .chain import HEADER_SIZE, PENDING_ENTRY_SIZE, STATE_RECORD_SIZE

MC_CHUNK = 1 << 17


class PlacementInfeasible(ValueError):
    pass


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class CaptureParams:
    n: int
    m: int
    s: int
    AD: int
    T: int | None = None

    def __post_init__(self):
        if self.T is None:
            object.__setattr__(self, "T", self.m)
        if self.n != self.m * self.s:
            raise ValueError(f"n={self.n} must equal m*s={self.m * self.s}")
        if not 0 <= self.AD <= self.n:
            raise ValueError("AD must lie in [0, n]")
        if not 1 <= self.T <= self.m:
            raise ValueError("T must lie in [1, m]")

    @classmethod
    def half(cls, m: int, s: int) -> "CaptureParams":
        n = m * s
        return cls(n=n, m=m, s=s, AD=n // 2)


@dataclass(frozen=True)
class CaptureResult:
    exact: Fraction
    approx: Fraction
    placement: tuple[int, ...]

    def exact_str(self) -> str:
        return format_probability(self.exact)


def format_probability(p: Fraction) -> str:
    """Scientific notation, plus a power-of-two form when p is exactly 2**-k."""
    if p == 0:
        return "0"
    sci = f"{float(p):.6e}" if float(p) > 0 else f"{p}"
    if p.numerator == 1 and p.denominator & (p.denominator - 1) == 0:
        return f"2^-{p.denominator.bit_length() - 1} = {sci}"
    return sci


def floor_remainder_split(AD: int, T: int) -> list[int]:
    """A_i = floor(AD/T) for the first T-1 occupations, remainder on the last."""
    base = AD // T
    return [base] * (T - 1) + [base + AD % T]


def optimal_placement(AD: int, T: int) -> list[int]:
    """Near-equal split of AD nodes over T occupations maximising the product.

    Parts differ by at most one, larger parts last. When AD mod T <= 1 this is
    identical to ``floor_remainder_split``; otherwise the remainder is spread
    one per occupation, since X*X > (X-1)*(X+1) makes any wider split worse.
    """
    if T < 1 or AD < 0:
        raise ValueError("need T >= 1 and AD >= 0")
    base, rem = divmod(AD, T)
    return [base] * (T - rem) + [base + 1] * rem


def compositions(total: int, parts: int):
    """All ordered tuples of ``parts`` non-negative ints summing to ``total``."""
    for cuts in itertools.combinations(range(total + parts - 1), parts - 1):
        prev = -1
        out = []
        for c in cuts:
            out.append(c - prev - 1)
            prev = c
        out.append(total + parts - 1 - prev - 1)
        yield tuple(out)


def capture_probability(params: CaptureParams, placement: Sequence[int] | None = None) -> CaptureResult:
    s, T = params.s, params.T
    if placement is None:
        placement = optimal_placement(params.AD, T)
        if max(placement, default=0) > s:
            raise PlacementInfeasible("optimal split exceeds s in some occupation")
    placement = tuple(placement)
    if len(placement) != T:
        raise PlacementInfeasible(f"placement has {len(placement)} entries, T={T}")
    if sum(placement) > params.AD or any(a < 0 or a > s for a in placement):
        raise PlacementInfeasible(f"placement {placement} infeasible for AD={params.AD}, s={s}")
    exact = Fraction(1)
    for a in placement:
        exact *= Fraction(a, s)
    approx = Fraction(params.AD, T * s) ** T
    return CaptureResult(exact, approx, placement)


def enumerate_capture(s: int, placement: Sequence[int], target: int = 0) -> Fraction:
    """Exhaustive oracle: fraction of all per-occupation permutation tuples in
    which every slot of segment ``target`` goes to an adversary node.

    Occupation i has nodes 0..s-1 of which the first ``placement[i]`` are
    adversarial; each permutation maps segment j -> node perm[j].
    """
    perms = list(itertools.permutations(range(s)))
    hits = 0
    total = 0
    for combo in itertools.product(perms, repeat=len(placement)):
        total += 1
        if all(p[target] < a for p, a in zip(combo, placement)):
            hits += 1
    return Fraction(hits, total)


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    ci95: float
    hits: int
    trials: int

    @property
    def low(self) -> float:
        return self.mean - self.ci95

    @property
    def high(self) -> float:
        return self.mean + self.ci95


def _mc_chunk(args) -> int:
    seed, index, size, s, placement = args
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))
    draws = rng.integers(0, s, size=(size, len(placement)))
    return int(np.all(draws < np.asarray(placement), axis=1).sum())


def monte_carlo_capture(
    params: CaptureParams,
    trials: int,
    seed: int,
    placement: Sequence[int] | None = None,
    workers: int = 1,
) -> MCEstimate:
    """Empirical capture rate of a fixed target segment over independent uniform
    per-occupation assignments. Trials are cut into fixed-size chunks with their
    own seeds, so the result does not depend on ``workers``."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if placement is None:
        placement = optimal_placement(params.AD, params.T)
    jobs = []
    left, idx = trials, 0
    while left > 0:
        size = min(MC_CHUNK, left)
        jobs.append((seed, idx, size, params.s, tuple(placement)))
        left -= size
        idx += 1
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            hits = sum(ex.map(_mc_chunk, jobs))
    else:
        hits = sum(map(_mc_chunk, jobs))
    p = hits / trials
    return MCEstimate(p, 1.96 * math.sqrt(p * (1 - p) / trials), hits, trials)


@dataclass(frozen=True)
class ShardCombineParams:
    n: int
    s1: int
    T: float
    pr_max: float = 1e-6

    def __post_init__(self):
        per_shard = self.n / self.s1
        if not 0.5 * per_shard < self.T <= per_shard:
            raise DomainError(f"T={self.T} must satisfy 0.5*n/s1 < T <= n/s1 (n/s1={per_shard:g})")


@dataclass(frozen=True)
class SegmentCountResult:
    s0: float
    ratio: float


def sharding_segment_count(params: ShardCombineParams) -> SegmentCountResult:
    """s0 = -n log 2 / log(2^-T (n/(s1 T))^T), evaluated in log space."""
    n, s1, T = params.n, params.s1, params.T
    log_arg = T * (math.log(n / (s1 * T)) - math.log(2.0))
    if not log_arg < 0:
        raise DomainError("2^-T (n/(s1 T))^T must be < 1")
    s0 = -n * math.log(2.0) / log_arg
    return SegmentCountResult(s0, s0 / s1)


def shard_failure_probability(n: int, s1: int, T: float, AD: float | None = None) -> float:
    AD = n / 2 if AD is None else AD
    return (AD / (T * s1)) ** T


def max_shard_count(n: int, t_frac: float, pr_max: float = 1e-6) -> int:
    """Largest s1 whose shard failure probability at AD=n/2 and T=t_frac*n/s1 stays within pr_max."""
    best = 0
    for s1 in range(1, n + 1):
        T = t_frac * n / s1
        if T < 1:
            break
        if shard_failure_probability(n, s1, T) <= pr_max:
            best = s1
    return best


@dataclass(frozen=True)
class StorageModelParams:
    SB: int = 1_000_000
    header_size: int = HEADER_SIZE
    state_record: int = STATE_RECORD_SIZE
    pending_record: int = PENDING_ENTRY_SIZE
    pending_per_block: int = 256
    accounts: int = 0
    h: int = 1
    s: int = 1
    m: int = 256

    def __post_init__(self):
        if min(self.SB, self.header_size, self.state_record, self.pending_record, self.h, self.s, self.m) <= 0:
            raise ValueError("storage model sizes must be positive")
        if self.pending_per_block < 0 or self.accounts < 0:
            raise ValueError("counts must be non-negative")


def longest_segment_blocks(h: int, s: int) -> int:
    s = min(s, h)
    return h // s + h % s


def node_storage_bytes(p: StorageModelParams) -> int:
    """Bytes held by a keeper of the last (longest) segment: its blocks, every
    header, and the latest state."""
    seg_blocks = longest_segment_blocks(p.h, p.s)
    block_bytes = p.SB + p.pending_record * p.pending_per_block
    return seg_blocks * block_bytes + p.h * p.header_size + p.state_record * p.accounts


def nakamoto_storage_bytes(h: int, SB: int) -> int:
    return h * SB
