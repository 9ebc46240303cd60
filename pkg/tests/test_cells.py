import enum
import threading

import pytest

from nbsync.cells import (
    Failed,
    RmwCell,
    Snapshot,
    Succeeded,
    SyncArray,
    SyncCell,
    TaggedRef,
    UnsupportedValue,
    set_access_hook,
)
from nbsync.orderings import ACQ, REL, RLX, SC, InvalidOrderPair, InvalidReadOrder, InvalidWriteOrder


class Color(enum.Enum):
    RED = 1


def record():
    seen = []
    set_access_hook(lambda cell, op, order: seen.append((cell.name, op, order)))
    return seen


def test_defaults_and_overrides_reach_the_hook():
    c = SyncCell(0, read=ACQ, write=REL, name="flag")
    seen = record()
    c.write(1)
    assert c.read() == 1
    c.read(RLX)
    c.write(2, SC)
    assert seen == [("flag", "write", REL), ("flag", "read", ACQ), ("flag", "read", RLX), ("flag", "write", SC)]


def test_invalid_orders_rejected():
    c = SyncCell(0)
    with pytest.raises(InvalidReadOrder):
        c.read(REL)
    with pytest.raises(InvalidWriteOrder):
        c.write(1, ACQ)
    with pytest.raises(InvalidReadOrder):
        SyncCell(0, read=REL)


def test_word_values_only():
    for ok in (None, True, 3.5, Color.RED, TaggedRef(object()), 2**64 - 1, -(2**63)):
        SyncCell(ok)
    for bad in ([], {}, "text", 2**64, -(2**63) - 1, (1, 2)):
        with pytest.raises(UnsupportedValue):
            SyncCell(bad)
    c = SyncCell(0)
    with pytest.raises(UnsupportedValue):
        c.write([1])


def test_exchange_success_and_failure():
    c = RmwCell(5)
    snap = c.snapshot()
    assert snap == Snapshot(5)
    assert c.exchange(snap, 6) is Succeeded
    result = c.exchange(snap, 7)
    assert isinstance(result, Failed) and not result
    assert result.fresh.observed == 6
    assert c.exchange(result.fresh, 7)
    assert c.peek() == 7


def test_exchange_pair_validated():
    c = RmwCell(0)
    with pytest.raises(InvalidOrderPair):
        c.exchange(c.snapshot(), 1, REL, ACQ)
    with pytest.raises(InvalidOrderPair):
        RmwCell(0, success=RLX, failure=SC)


def test_spurious_failures_are_hidden():
    c = RmwCell(0)
    budget = [3]

    def flaky():
        budget[0] -= 1
        return budget[0] >= 0

    c.spurious = flaky
    assert c.exchange(c.snapshot(), 1)
    assert c.peek() == 1 and budget[0] == -1


def test_tagged_ref_identity_and_tag():
    a, b = object(), object()
    r = TaggedRef(a)
    assert r == TaggedRef(a, 0)
    assert r != TaggedRef(b, 0)
    assert r.bump(a) != r
    assert r.bump(b) == TaggedRef(b, 1)
    assert hash(r) == hash(TaggedRef(a))


def test_tag_defeats_aba():
    node = object()
    c = RmwCell(TaggedRef(node))
    stale = c.snapshot()
    top = c.peek()
    c.exchange(c.snapshot(), top.bump(None))
    c.exchange(c.snapshot(), c.peek().bump(node))  # same node back on top
    assert c.peek().ref is node
    assert not c.exchange(stale, TaggedRef(None))


def test_array():
    arr = SyncArray([0, 0, 0], read=ACQ, write=REL, name="level")
    assert len(arr) == 3
    arr[1].write(5)
    assert [c.read() for c in arr] == [0, 5, 0]
    assert arr[2].name == "level[2]"


def test_concurrent_exchanges_are_atomic(busy_switching):
    c = RmwCell(0)

    def bump():
        for _ in range(2000):
            while True:
                s = c.snapshot()
                if c.exchange(s, s.observed + 1):
                    break

    threads = [threading.Thread(target=bump) for _ in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert c.peek() == 8000
