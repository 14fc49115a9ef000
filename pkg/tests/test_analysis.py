import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from segchain.analysis import (
    CaptureParams,
    DomainError,
    PlacementInfeasible,
    ShardCombineParams,
    StorageModelParams,
    capture_probability,
    compositions,
    enumerate_capture,
    format_probability,
    longest_segment_blocks,
    max_shard_count,
    monte_carlo_capture,
    nakamoto_storage_bytes,
    node_storage_bytes,
    optimal_placement,
    floor_remainder_split,
    shard_failure_probability,
    sharding_segment_count,
)


@given(st.integers(1, 10**9))
def test_square_beats_neighbours(x):
    assert x * x > (x - 1) * (x + 1)


def test_placement_examples():
    assert optimal_placement(10, 3) == [3, 3, 4]
    assert math.prod(optimal_placement(10, 3)) == 36
    assert optimal_placement(0, 4) == [0, 0, 0, 0]
    assert floor_remainder_split(10, 3) == [3, 3, 4]


def test_literal_split_loses_when_remainder_exceeds_one():
    assert floor_remainder_split(11, 4) == [2, 2, 2, 5]
    assert math.prod(floor_remainder_split(11, 4)) == 40 < math.prod(optimal_placement(11, 4)) == 54


@given(st.integers(0, 60), st.integers(1, 12))
def test_placement_shape(AD, T):
    p = optimal_placement(AD, T)
    assert sum(p) == AD and len(p) == T
    assert max(p) - min(p) <= 1 and p == sorted(p)
    if AD % T <= 1:
        assert p == floor_remainder_split(AD, T)


def test_compositions_count():
    for total, parts in [(0, 1), (5, 1), (4, 3), (7, 4)]:
        comps = list(compositions(total, parts))
        assert len(comps) == math.comb(total + parts - 1, parts - 1) == len(set(comps))
        assert all(sum(c) == total and len(c) == parts and min(c) >= 0 for c in comps)


def test_capture_examples():
    res = capture_probability(CaptureParams.half(2, 3))
    assert res.approx == Fraction(1, 4)
    res = capture_probability(CaptureParams(n=6, m=2, s=3, AD=3), placement=[1, 2])
    assert res.exact == Fraction(2, 9) == enumerate_capture(3, [1, 2])
    assert capture_probability(CaptureParams(n=12, m=3, s=4, AD=0)).exact == 0


def test_exact_equals_approx_when_T_divides():
    for m, s in [(2, 4), (4, 64), (8, 64)]:
        res = capture_probability(CaptureParams.half(m, s))
        assert res.exact == res.approx == Fraction(1, 2**m)


def test_two_to_the_minus_256():
    res = capture_probability(CaptureParams.half(256, 64))
    assert res.exact == Fraction(1, 2**256)
    assert res.exact_str().startswith("2^-256 = 8.636169e-78")


def test_format_probability():
    assert format_probability(Fraction(0)) == "0"
    assert format_probability(Fraction(1, 8)) == "2^-3 = 1.250000e-01"
    assert format_probability(Fraction(2, 9)) == "2.222222e-01"


def test_infeasible_placements():
    params = CaptureParams(n=6, m=2, s=3, AD=3)
    with pytest.raises(PlacementInfeasible):
        capture_probability(params, placement=[2, 2])
    with pytest.raises(PlacementInfeasible):
        capture_probability(params, placement=[1])
    with pytest.raises(PlacementInfeasible):
        capture_probability(CaptureParams(n=6, m=2, s=3, AD=6, T=1))
    with pytest.raises(ValueError):
        CaptureParams(n=7, m=2, s=3, AD=1)


def test_enumeration_small():
    assert enumerate_capture(2, [1, 1]) == Fraction(1, 4)
    assert enumerate_capture(3, [3, 3]) == 1
    assert enumerate_capture(3, [0, 3]) == 0
    assert enumerate_capture(4, [2, 3], target=3) == Fraction(6, 16)


def test_monte_carlo_two_ninths():
    params = CaptureParams(n=6, m=2, s=3, AD=3)
    est = monte_carlo_capture(params, 10**6, seed=1, placement=[1, 2])
    assert est.low <= 2 / 9 <= est.high


def test_monte_carlo_everything_adversarial():
    params = CaptureParams(n=8, m=2, s=4, AD=8)
    est = monte_carlo_capture(params, 5000, seed=3)
    assert est.mean == 1.0 and est.hits == 5000


def test_monte_carlo_ci_shrinks():
    params = CaptureParams.half(2, 8)
    a = monte_carlo_capture(params, 200_000, seed=5)
    b = monte_carlo_capture(params, 400_000, seed=6)
    assert b.ci95 / a.ci95 == pytest.approx(1 / math.sqrt(2), rel=0.15)


def test_monte_carlo_independent_of_workers():
    params = CaptureParams.half(3, 4)
    one = monte_carlo_capture(params, 300_000, seed=9, workers=1)
    two = monte_carlo_capture(params, 300_000, seed=9, workers=2)
    assert one == two


def s0_oracle(n, s1, T):
    mpmath.mp.dps = 50
    n, s1, T = mpmath.mpf(n), mpmath.mpf(s1), mpmath.mpf(T)
    return -n * mpmath.log(2) / mpmath.log(mpmath.power(2, -T) * mpmath.power(n / (s1 * T), T))


def test_segment_count_example():
    res = sharding_segment_count(ShardCombineParams(8000, 16, 300))
    oracle = float(s0_oracle(8000, 16, 300))
    assert res.s0 == pytest.approx(oracle, rel=1e-12)
    assert res.s0 == pytest.approx(101.4, rel=0.005)
    assert res.ratio == pytest.approx(6.34, rel=0.005)


def test_segment_count_degenerate_case():
    res = sharding_segment_count(ShardCombineParams(8000, 16, 500))
    assert res.s0 == pytest.approx(8000 / 500, rel=1e-12)


@pytest.mark.parametrize("n", [4000, 8000])
@pytest.mark.parametrize("s1", [8, 16, 32])
def test_segment_count_grid(n, s1):
    T = 0.6 * n / s1
    res = sharding_segment_count(ShardCombineParams(n, s1, T))
    assert res.s0 == pytest.approx(float(s0_oracle(n, s1, T)), rel=1e-12)
    assert res.ratio > 1


def test_threshold_domain():
    with pytest.raises(DomainError):
        ShardCombineParams(8000, 16, 250)
    with pytest.raises(DomainError):
        ShardCombineParams(8000, 16, 501)


def test_shard_failure_and_max_count():
    assert shard_failure_probability(8000, 16, 300) == pytest.approx((4000 / 4800) ** 300)
    best = max_shard_count(8000, 0.6)
    assert shard_failure_probability(8000, best, 0.6 * 8000 / best) <= 1e-6
    assert shard_failure_probability(8000, best + 1, 0.6 * 8000 / (best + 1)) > 1e-6


def test_storage_examples():
    p = StorageModelParams(SB=10**6, pending_per_block=256, accounts=10**6, h=1000, s=100)
    assert longest_segment_blocks(1000, 100) == 10
    assert node_storage_bytes(p) == 10 * (10**6 + 68 * 256) + 1000 * 112 + 41 * 10**6 == 51_286_080
    assert node_storage_bytes(p) / nakamoto_storage_bytes(1000, 10**6) == pytest.approx(0.0513, abs=1e-4)
    for h in (1, 7, 50):
        q = StorageModelParams(SB=5000, pending_per_block=0, accounts=0, h=h, s=h)
        assert node_storage_bytes(q) == 5000 + h * 112
    with pytest.raises(ValueError):
        StorageModelParams(SB=0)


@settings(max_examples=50)
@given(st.integers(1, 5000), st.integers(1, 300))
def test_longest_segment_is_the_last(h, s):
    if s > h:
        s = h
    assert longest_segment_blocks(h, s) == h - (s - 1) * (h // s)
