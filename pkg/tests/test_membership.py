import io
import statistics

import pytest
from hypothesis import given, settings, strategies as st

from helpers import node_key
from segchain.assignment import assign_storage
from segchain.crypto import hash_bytes
from segchain.membership import (
    DuplicateIdentity,
    InsufficientDifficulty,
    Keepalive,
    MembershipError,
    NodeRecord,
    PendingQueue,
    PowRecord,
    Roster,
    StalePrevBlockRef,
    Status,
    anchor_height,
    choose_occupation,
    eliminate_and_backfill,
    growth_trigger,
    keepalive_check,
    pow_meets_target,
    solve_pow,
    submit_join,
    write_roster_csv,
)

ANCHOR = hash_bytes(b"anchor")


def queue_with(lengths):
    q = PendingQueue.empty(len(lengths))
    n = 0
    for occ, ln in enumerate(lengths, start=1):
        for _ in range(ln):
            n += 1
            q = q.append(occ, node_key(10_000 + n))
    return q


def make_roster(m, s, pending=0):
    """m x s grid of fresh active nodes plus ``pending`` queued nodes per occupation."""
    roster = Roster(m, s)
    by_occ = {}
    n = 0
    for i in range(1, m + 1):
        by_occ[i] = []
        for _ in range(s):
            n += 1
            roster.nodes[node_key(n)] = NodeRecord(node_key(n), i)
            by_occ[i].append(node_key(n))
    roster.apply_assignment(assign_storage(by_occ, ANCHOR).grid)
    q = PendingQueue.empty(m)
    for i in range(1, m + 1):
        for _ in range(pending):
            n += 1
            roster.nodes[node_key(n)] = NodeRecord(node_key(n), i)
            q = q.append(i, node_key(n))
    return roster, q


def test_choose_occupation():
    assert choose_occupation(queue_with([3, 1, 2])) == 2
    assert choose_occupation(queue_with([0, 0, 0])) == 1
    assert choose_occupation(queue_with([0, 0, 0]), among=[2, 3]) == 2


def test_greedy_joins_fill_evenly():
    m = 5
    q = PendingQueue.empty(m)
    for n in range(10 * m):
        occ = choose_occupation(q)
        pw = PowRecord(ANCHOR, node_key(n), 12, occupation=occ)
        q = submit_join(q, pw, s=3, P=4, expected_anchor=ANCHOR)
    assert q.lengths() == [10] * m
    assert growth_trigger(q)


def test_submit_join_checks():
    q = PendingQueue.empty(2)
    ok = PowRecord(ANCHOR, node_key(1), 4 * 3, occupation=1)
    assert submit_join(q, ok, 3, 4, ANCHOR)[1] == (node_key(1),)
    low = PowRecord(ANCHOR, node_key(1), 4 * 3 - 1, occupation=1)
    with pytest.raises(InsufficientDifficulty):
        submit_join(q, low, 3, 4, ANCHOR)
    with pytest.raises(StalePrevBlockRef):
        submit_join(q, ok, 3, 4, hash_bytes(b"other"))
    with pytest.raises(DuplicateIdentity):
        submit_join(q, ok, 3, 4, ANCHOR, taken=[node_key(1)])
    with pytest.raises(DuplicateIdentity):
        submit_join(submit_join(q, ok, 3, 4, ANCHOR), ok, 3, 4, ANCHOR)
    with pytest.raises(MembershipError):
        submit_join(q, PowRecord(ANCHOR, node_key(2), 12, occupation=3), 3, 4, ANCHOR)


def test_rejoin_after_elimination():
    roster, q = make_roster(2, 2, pending=1)
    victim = roster.keeper(1, 1)
    roster, q, _ = eliminate_and_backfill(roster, victim, q)
    live = [k for k, r in roster.nodes.items() if r.status is not Status.ELIMINATED]
    pw = PowRecord(ANCHOR, victim.identity_key, 2, occupation=1)
    q = submit_join(q, pw, 2, 1, ANCHOR, taken=live)
    assert victim.identity_key in q


def test_anchor_height():
    assert anchor_height(10, 4) == 6
    assert anchor_height(2, 4) == 0


def test_keepalive():
    pending = NodeRecord(node_key(1), 1)
    assert all(keepalive_check(pending, 1.0, 1.0) is Keepalive.PASS for _ in range(5))
    assert keepalive_check(pending, 0.99, 1.0) is Keepalive.DROP
    active = NodeRecord(node_key(2), 1, assigned_segment=1, status=Status.ACTIVE)
    s = 8
    assert keepalive_check(active, 0.9 * s, 1.0, window=s) is Keepalive.DROP
    assert keepalive_check(active, 1.0 * s, 1.0, window=s) is Keepalive.PASS
    with pytest.raises(MembershipError):
        keepalive_check(NodeRecord(node_key(3), 1, status=Status.ELIMINATED), 1.0)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 10), st.integers(1, 6), st.data())
def test_budget_cannot_keep_an_extra_identity(half_n, s, data):
    # n/2 units per iteration spread over n/2 + 1 identities: someone misses its window
    ids = half_n + 1
    spent = [0.0] * ids
    for _ in range(s):
        weights = data.draw(st.lists(st.integers(0, 100), min_size=ids, max_size=ids).filter(any))
        total = sum(weights)
        for j, w in enumerate(weights):
            spent[j] += half_n * w / total
    nodes = [NodeRecord(node_key(j), 1, assigned_segment=1, status=Status.ACTIVE) for j in range(ids)]
    verdicts = [keepalive_check(r, x, 1.0, window=s) for r, x in zip(nodes, spent)]
    assert Keepalive.DROP in verdicts


def test_growth_trigger():
    assert growth_trigger(queue_with([10, 10, 10]))
    assert not growth_trigger(queue_with([10, 9, 10]))
    q = queue_with([12, 10, 11])
    taken, rest = q.take_front(10)
    assert [len(t) for t in taken] == [10, 10, 10]
    assert rest.lengths() == [2, 0, 1]
    assert taken[0] == list(q[1][:10])


def test_backfill_from_queue():
    roster, q = make_roster(3, 2, pending=2)
    victim = roster.keeper(2, 1)
    head = q[2][0]
    new, q2, delta = eliminate_and_backfill(roster, victim, q)
    assert delta == 0 and new.s == 2 and new.is_exact_grid()
    assert new.grid[(2, 1)] == head
    assert q2.lengths() == [2, 1, 2]
    assert new.nodes[victim.identity_key].status is Status.ELIMINATED
    assert roster.nodes[victim.identity_key].status is Status.ACTIVE  # input untouched


def test_shrink_when_queue_empty():
    m = 4
    roster, q = make_roster(m, 2)
    victim = roster.keeper(3, 1)
    upper = {i: roster.grid[(i, 2)] for i in range(1, m + 1)}
    new, q2, delta = eliminate_and_backfill(roster, victim, q)
    assert delta == -1 and new.s == 1 and new.is_exact_grid()
    assert sum(q2.lengths()) == m - 1
    assert q2.lengths() == [1, 1, 0, 1]
    assert all(new.grid[(i, 1)] == upper[i] for i in range(1, m + 1))
    for key in q2.keys():
        rec = new.nodes[key]
        assert rec.status is Status.PENDING and rec.assigned_segment is None


def test_shrink_with_single_occupation():
    roster, q = make_roster(1, 3)
    new, q2, delta = eliminate_and_backfill(roster, roster.keeper(1, 2), q)
    assert delta == -1 and new.s == 2 and q2.keys() == [] and new.is_exact_grid()


def test_cannot_dissolve_last_segment():
    roster, q = make_roster(2, 1)
    with pytest.raises(MembershipError):
        eliminate_and_backfill(roster, roster.keeper(1, 1), q)


def test_hash_pow_is_linear_in_difficulty():
    for d in (1, 2, 16):
        rec = solve_pow(ANCHOR, node_key(1), d, occupation=2)
        assert pow_meets_target(rec) and rec.claimed_difficulty == d
    attempts = [int.from_bytes(solve_pow(ANCHOR, node_key(k), 16).nonce, "big") + 1 for k in range(400)]
    assert 12 < statistics.mean(attempts) < 20
    assert solve_pow(ANCHOR, node_key(1), 2**40, max_attempts=5) is None


def test_pow_json_roundtrip():
    rec = PowRecord(ANCHOR, node_key(1), 77, bytes(range(32)), 4)
    assert PowRecord.from_json(rec.to_json()) == rec
    with pytest.raises(ValueError):
        PowRecord(ANCHOR, node_key(1), 0)


def test_roster_csv():
    roster, _ = make_roster(2, 2)
    buf = io.StringIO()
    write_roster_csv(roster, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "identity_key,occupation,segment,status,honest"
    assert len(lines) == 5
    assert lines[1].split(",")[3] == "active"


def test_node_record_check():
    with pytest.raises(MembershipError):
        NodeRecord(node_key(1), 1, status=Status.ACTIVE).check()
    with pytest.raises(MembershipError):
        NodeRecord(node_key(1), 1, assigned_segment=2).check()
