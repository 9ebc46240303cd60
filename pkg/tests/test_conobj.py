import threading
import time

import pytest

from nbsync.cells import SyncCell, TaggedRef, set_access_hook
from nbsync.conobj import (
    THRESHOLDS,
    Allocator,
    BooleanGuard,
    ConcurrentObject,
    DoubleFree,
    DuplicateEntry,
    EntrySpec,
    ForeignCell,
    LoopKind,
    PrivateEntry,
    ReclaimCounter,
    RmwGuard,
    Scheduler,
    SimTask,
    Stage,
    StageViolation,
    SyncLoop,
    Task,
    TaskState,
    UnknownEntry,
    UseAfterFree,
    bind_task,
    current_task,
    get_task_state,
    pick,
    simulate_rounds,
    with_reclamation,
)
from nbsync.examples.stack import NonBlockingStack


def counter_object():
    obj = ConcurrentObject("counter")
    obj.rmw("value", 0)
    calls = {"once": 0, "retry": 0}

    def once(ctx):
        calls["once"] += 1

    def bump(ctx):
        calls["retry"] += 1
        ctx.exchange(ctx.snapshot.observed + ctx.args[0])
        return ctx.snapshot.observed + ctx.args[0]

    obj.register(EntrySpec("Add", guard=RmwGuard("value"), once=(once,), retry=(bump,)))
    return obj, calls


def contend(cell, times, change):
    """Make the next ``times`` exchanges on ``cell`` fail by changing it first."""
    left = [times]
    busy = [False]

    def hook(c, op, order):
        if c is cell and op == "exchange" and left[0] > 0 and not busy[0]:
            busy[0] = True
            left[0] -= 1
            c.write(change(c.peek()))
            busy[0] = False

    set_access_hook(hook)
    return left


def test_uncontended_entry_runs_each_stage_once():
    obj, calls = counter_object()
    assert obj.call("Add", 5) == 5
    assert calls == {"once": 1, "retry": 1}
    assert obj.cell("value").peek() == 5


def test_retry_restarts_only_retry_stages():
    obj, calls = counter_object()
    contend(obj.cell("value"), 3, lambda v: v + 100)
    assert obj.call("Add", 1) == 301
    assert calls == {"once": 1, "retry": 4}


def test_once_stage_not_repeated_on_stack_push():
    allocated = []
    s = NonBlockingStack(on_push_once=lambda: allocated.append(1))
    s.push("a")
    contend(s.head, 3, lambda top: TaggedRef(top.ref, top.tag + 1))
    s.push("b")
    assert len(allocated) == 2
    assert s.to_list() == ["b", "a"]


def test_registration_checks():
    obj = ConcurrentObject("o")
    obj.rmw("x", 0)
    obj.sync("flag", False)
    other = SyncCell(0)
    with pytest.raises(ForeignCell):
        obj.register(EntrySpec("A", guard=BooleanGuard(lambda v: True, reads=(other,))))
    with pytest.raises(StageViolation):
        obj.register(EntrySpec("B", guard=RmwGuard("flag")))
    with pytest.raises(StageViolation):
        obj.register(EntrySpec("C", guard=RmwGuard("x"),
                               once=(Stage(lambda c: None, reads_governing_snapshot=True),)))
    obj.rmw("y", 0)
    with pytest.raises(StageViolation):
        obj.register(EntrySpec("D", guard=RmwGuard("x"), retry=(Stage(lambda c: None, exchanges=("y",)),)))
    obj.register(EntrySpec("E"))
    with pytest.raises(DuplicateEntry):
        obj.register(EntrySpec("E"))
    with pytest.raises(UnknownEntry):
        obj.call("Nope")


def test_cell_belongs_to_one_object():
    c = SyncCell(0)
    ConcurrentObject("a").add_cell("c", c)
    with pytest.raises(ForeignCell):
        ConcurrentObject("b").add_cell("c", c)


def test_exchange_outside_retry_stage_is_rejected():
    obj = ConcurrentObject("o")
    obj.rmw("x", 0)
    obj.register(EntrySpec("Bad", guard=RmwGuard("x"), once=(lambda ctx: ctx.exchange(1),)))
    with pytest.raises(StageViolation):
        obj.call("Bad")
    obj.register(EntrySpec("NoGov", once=(lambda ctx: ctx.exchange(1),)))
    with pytest.raises(StageViolation):
        obj.call("NoGov")


def test_guard_view_restricted_to_declared_cells():
    obj = ConcurrentObject("o")
    obj.sync("a", True)
    obj.sync("b", True)
    obj.register(EntrySpec("G", guard=BooleanGuard(lambda v: v.b, reads=("a",))))
    with pytest.raises(ForeignCell):
        obj.call("G")


def test_private_entries_and_families():
    obj = ConcurrentObject("o")
    obj.register(EntrySpec("Inner", once=(lambda ctx: ctx.index * 10,), index=1, private=True))
    obj.register(EntrySpec("Inner", once=(lambda ctx: ctx.index * 10,), index=2, private=True))
    obj.register(EntrySpec("Outer", once=(lambda ctx: ctx.call("Inner", index=ctx.args[0]),)))
    assert obj.call("Outer", 2) == 20
    with pytest.raises(PrivateEntry):
        obj.call("Inner", index=1)


def test_guard_waits_until_true():
    obj = ConcurrentObject("o")
    flag = obj.sync("flag", False)
    obj.register(EntrySpec("Wait", guard=BooleanGuard(lambda v: v.flag, reads=("flag",)),
                           once=(lambda ctx: "through",)))
    out = []
    t = threading.Thread(target=lambda: out.append(obj.call("Wait")))
    t.start()
    time.sleep(0.02)
    assert out == []
    flag.write(True)
    t.join(2)
    assert out == ["through"]


# -- task states ------------------------------------------------------------

def spin(kind, failures):
    task = Task("t")
    with SyncLoop(kind, task) as loop:
        for _ in range(failures):
            loop.retry()
    return task


def test_thresholds():
    assert THRESHOLDS == {LoopKind.GUARD: 2, LoopKind.RMW: 3}
    for kind in LoopKind:
        task = spin(kind, 5)
        first = task.transitions[0]
        assert first[:2] == (THRESHOLDS[kind], TaskState.IN_SYNC_LOOP)
        assert task.transitions[-1][1] is TaskState.RUNNABLE
        assert task.state is TaskState.RUNNABLE


def test_short_loops_stay_runnable():
    assert spin(LoopKind.GUARD, 0).transitions == []
    assert spin(LoopKind.RMW, 1).transitions == []
    assert spin(LoopKind.RMW, 2).transitions[0][0] == 3


def test_rmw_entry_reports_transition_at_third_attempt():
    obj, _ = counter_object()
    task = Task("worker")
    bind_task(task)
    try:
        contend(obj.cell("value"), 2, lambda v: v + 1)
        obj.call("Add", 1)
        assert task.transitions[0][:2] == (3, TaskState.IN_SYNC_LOOP)
        assert get_task_state(task) is TaskState.RUNNABLE
    finally:
        bind_task(None)


def test_current_task_is_per_thread():
    mine = current_task()
    other = []
    t = threading.Thread(target=lambda: other.append(current_task()))
    t.start()
    t.join()
    assert other[0] is not mine and current_task() is mine


# -- scheduling -------------------------------------------------------------

def test_pick_prefers_runnable():
    a, b, c = Task("a"), Task("b"), Task("c")
    a.state = b.state = TaskState.IN_SYNC_LOOP
    assert pick([a, b, c], 2) == [c, a]
    assert pick([a, b, c], 0) == []


def spinner_steps():
    while True:
        yield TaskState.IN_SYNC_LOOP


def test_simulated_rounds_progress():
    spinners = [SimTask(f"s{i}", spinner_steps()) for i in range(2)]
    work = SimTask("work", iter([TaskState.RUNNABLE] * 3))
    for s in spinners:
        s.state = TaskState.IN_SYNC_LOOP
    log = simulate_rounds(2, spinners + [work], max_rounds=10)
    assert work.finished_round == 4
    assert all("work" in names for names in log[:4])


def test_scheduler_lets_runnable_task_through():
    stop = SyncCell(False)

    def spinner():
        with SyncLoop(LoopKind.GUARD) as loop:
            while not stop.read():
                loop.retry()

    sched = Scheduler(2)
    spinners = [sched.spawn(spinner, name=f"spin{i}") for i in range(2)]
    time.sleep(0.02)
    start = time.perf_counter()
    job = sched.spawn(lambda: 42, name="job")
    assert job.done.wait(1.0)
    elapsed = time.perf_counter() - start
    stop.write(True)
    sched.join(2)
    assert job.result == 42 and elapsed < 0.1
    assert all(s.transitions[0][:2] == (2, TaskState.IN_SYNC_LOOP) for s in spinners)
    assert sched.max_spinners_with_runnable_waiting <= 2


def test_scheduler_surfaces_errors():
    sched = Scheduler(1)

    def boom():
        raise KeyError("x")

    task = sched.spawn(boom)
    sched.join(1)
    assert isinstance(task.error, KeyError)
    with pytest.raises(ValueError):
        Scheduler(0)


# -- reclamation ------------------------------------------------------------

class Box:
    def __init__(self, v):
        self.v = v


def test_allocator_detects_misuse():
    a = Allocator()
    n = a.new(Box, 1)
    assert Allocator.deref(n).v == 1
    a.free(n)
    with pytest.raises(UseAfterFree):
        Allocator.deref(n)
    with pytest.raises(DoubleFree):
        a.free(n)
    assert (a.allocated, a.freed, a.live) == (1, 1, 0)


def test_last_one_out_frees():
    a = Allocator()
    rc = ReclaimCounter(a)
    nodes = [a.new(Box, i) for i in range(3)]
    rc.enter()
    rc.enter()
    assert rc.exit(nodes[:2]) == 0
    assert rc.pending() == 2 and rc.count == 1
    assert rc.exit([nodes[2]]) == 3
    assert rc.pending() == 0 and a.freed == 3 and rc.max_inside == 2


def test_with_reclamation_requires_entry():
    with pytest.raises(KeyError):
        with_reclamation(ConcurrentObject("o"), "Pop")


def test_reclaimed_stack_stress(busy_switching):
    s = NonBlockingStack()

    def body(t):
        for i in range(1500):
            s.push((t, i))
            s.pop()

    threads = [threading.Thread(target=body, args=(t,)) for t in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert s.to_list() == []
    assert s.counter.pending() == 0 and s.counter.count == 0
    assert s.allocator.freed == s.allocator.allocated == 6000
