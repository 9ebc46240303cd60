"""One test per acceptance criterion, each at its stated bound."""

import time
from collections import Counter

from nbsync.cells import RmwCell, SyncCell, TaggedRef, set_access_hook
from nbsync.conobj import LoopKind, Scheduler, SyncLoop, TaskState
from nbsync.examples import PETERSON_VARIANTS, ApiStack, NonBlockingStack, read_modify_write
from nbsync.examples.harness import rmw_counter
from nbsync.examples.transcriptions import message_passing, peterson
from nbsync.orderings import (
    ACQ,
    REL,
    InvalidOrderPair,
    MemoryOrder,
    strictness_leq,
    validate_rmw_pair,
)
from nbsync.simulator import MAX_HOLDERS, Expr, Model, detect_races, enumerate_outcomes

import stack_suite
from acceptance_log import criterion


R2_IS_ZERO = Expr("r2 == 0")


@criterion(1, "message passing: r2=0 unreachable with release/acquire, reachable relaxed")
def test_c1_message_passing(notes):
    start = time.perf_counter()
    ra = enumerate_outcomes(message_passing("release", "acquire"), Model.TABLE1, unroll=2)
    relaxed_program = message_passing("relaxed", "relaxed")
    relaxed = enumerate_outcomes(relaxed_program, Model.TABLE1, unroll=2)
    elapsed = time.perf_counter() - start
    assert ra.satisfying(R2_IS_ZERO) == []
    hits = relaxed.satisfying(R2_IS_ZERO)
    assert hits and hits[0].witness is not None
    names = [t.name for t in relaxed_program.threads]
    print("witness for r2=0 under relaxed annotations:")
    for line in hits[0].witness.format(names):
        print("  " + line)
    assert elapsed < 1.0, elapsed


@criterion(2, "race free programs: reordered outcomes equal SC outcomes")
def test_c2_drf_sc(notes):
    for program in (message_passing("release", "acquire"), peterson("sc")):
        start = time.perf_counter()
        assert detect_races(program) == []
        sc = enumerate_outcomes(program, Model.SC)
        relaxed = enumerate_outcomes(program, Model.TABLE1)
        elapsed = time.perf_counter() - start
        assert relaxed.valuations() == sc.valuations(), program.name
        assert elapsed < 10.0, (program.name, elapsed)
        notes.append(f"{program.name}: {len(sc)} outcomes {elapsed:.2f}s")


@criterion(3, "Peterson variants: mutual exclusion and identical outcome sets (SC model)")
def test_c3_peterson(notes):
    start = time.perf_counter()
    sets = {}
    for variant in PETERSON_VARIANTS:
        outcomes = enumerate_outcomes(peterson(variant), Model.SC)
        assert all(o.valuation[MAX_HOLDERS] == 1 for o in outcomes), variant
        sets[variant] = outcomes.valuations()
    assert len(set(map(frozenset, sets.values()))) == 1
    assert time.perf_counter() - start < 30.0
    # Under reordering the release/acquire variants lose mutual exclusion.
    broken = [v for v in PETERSON_VARIANTS
              if any(o.valuation[MAX_HOLDERS] == 2 for o in enumerate_outcomes(peterson(v), Model.TABLE1))]
    notes.append("table1 model admits two holders for: " + ", ".join(broken))


@criterion(4, "exchange order pairs: 5x5 table matches the lattice rule")
def test_c4_order_pairs(notes):
    reads = {MemoryOrder.SEQ_CST, MemoryOrder.ACQUIRE, MemoryOrder.RELAXED}
    legal = []
    for success in MemoryOrder:
        for failure in MemoryOrder:
            expect = (success is not MemoryOrder.NOT_ATOMIC and failure in reads
                      and strictness_leq(failure, success))
            try:
                validate_rmw_pair(success, failure)
                accepted = True
            except InvalidOrderPair:
                accepted = False
            assert accepted == expect, (success, failure)
            if accepted:
                legal.append((success, failure))
    try:
        validate_rmw_pair(REL, ACQ)
        raise AssertionError("(Release, Acquire) accepted")
    except InvalidOrderPair:
        pass
    assert validate_rmw_pair(ACQ, ACQ) == (ACQ, ACQ)
    assert len(legal) == 7
    notes.append(f"{len(legal)} legal pairs (criterion text says 15)")


def stack_criterion(make, notes):
    start = time.perf_counter()
    r = stack_suite.check_stress(make, threads=4, pairs=10_000)
    elapsed = time.perf_counter() - start
    assert elapsed < 60.0, elapsed
    runs = stack_suite.check_linearizable_two_by_two(make)
    notes.append(f"stress {elapsed:.1f}s, {sum(r.popped.values())} pops; {runs} schedules linearized")


@criterion(5, "non-blocking stack: stress and 2x2 linearizability")
def test_c5_stack(notes, busy_switching):
    stack_suite.check_lifo(NonBlockingStack)
    stack_criterion(NonBlockingStack, notes)


@criterion(6, "execute-once stages survive forced retries")
def test_c6_execute_once(notes):
    allocations = []
    s = NonBlockingStack(on_push_once=lambda: allocations.append(1))
    s.push("bottom")
    allocations.clear()
    exchanges = Counter()
    forced = [3]

    def hook(cell, op, order):
        if cell is s.head and op == "exchange":
            exchanges["attempts"] += 1
            if forced[0]:
                forced[0] -= 1
                top = cell.peek()
                cell.write(TaggedRef(top.ref, top.tag + 1))

    set_access_hook(hook)
    s.push("top")
    set_access_hook(None)
    assert exchanges["attempts"] >= 4, exchanges
    assert len(allocations) == 1
    assert s.to_list() == ["top", "bottom"]
    notes.append(f"{exchanges['attempts'] - 1} retries, once-stage ran {len(allocations)}x")


@criterion(7, "scheduler: runnable task finishes while two tasks spin")
def test_c7_scheduler(notes):
    stop = SyncCell(False)
    counter = RmwCell(0)

    def guard_spinner():
        with SyncLoop(LoopKind.GUARD) as loop:
            while not stop.read():
                loop.retry()

    def rmw_spinner():
        # Every exchange is made to fail until told to stop.
        with SyncLoop(LoopKind.RMW) as loop:
            while True:
                snap = counter.snapshot()
                if stop.read():
                    counter.exchange(snap, snap.observed + 1)
                    return
                counter.write(snap.observed + 1)
                assert not counter.exchange(snap, -1)
                loop.retry()

    sched = Scheduler(2)
    spinners = [sched.spawn(guard_spinner, name="guard"), sched.spawn(rmw_spinner, name="rmw")]
    time.sleep(0.02)
    start = time.perf_counter()
    job = sched.spawn(lambda: "done", name="job")
    finished = job.done.wait(1.0)
    elapsed = time.perf_counter() - start
    stop.write(True)
    sched.join(2)
    assert finished and job.result == "done"
    assert elapsed < 0.1, elapsed
    guard, rmw = spinners
    assert guard.transitions[0][:2] == (2, TaskState.IN_SYNC_LOOP)
    assert rmw.transitions[0][:2] == (3, TaskState.IN_SYNC_LOOP)
    notes.append(f"runnable task done in {elapsed * 1000:.1f} ms")


@criterion(8, "read_modify_write: counter and API stack")
def test_c8_read_modify_write(notes, busy_switching):
    cell = RmwCell(5)
    attempts = []
    assert read_modify_write(cell, lambda v: v + 1, attempts=attempts) == 6 and attempts == [1]
    assert rmw_counter(RmwCell(0), threads=2, increments=1000) == 2000
    stack_suite.check_lifo(ApiStack)
    stack_criterion(ApiStack, notes)
