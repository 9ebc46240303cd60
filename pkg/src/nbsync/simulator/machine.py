"""Operational enumeration of litmus programs.

Each thread commits its instructions to a single-copy memory in some
linearization of program order. Under the SC model that linearization is
program order itself. Under the relaxed models an instruction may commit
before an earlier, still-pending one when the pair is reorderable under the
chosen constraint mode and no dependency links them: register data
dependencies, same-location accesses, the control dependency on every
loop-exit check, and the ghost critical-section markers, which act as
thread-local barriers. Loops are unrolled a bounded number of times; a
thread still spinning after the last iteration is blocked and its execution
is reported separately.
"""

from __future__ import annotations

import enum
import json
import sys
from dataclasses import dataclass, field
from typing import Iterator, Optional

from ..orderings import (
    AccessKind,
    ConstraintMode,
    MemoryOrder,
    is_acquire_class,
    is_release_class,
    reorder_allowed,
    rmw_read_order,
    rmw_write_order,
)
from .program import MAX_HOLDERS, Assign, CsEnter, CsExit, Load, Loop, Program, Rmw, Store

DEFAULT_UNROLL = 2
DEFAULT_MAX_STATES = 2_000_000


class Model(enum.Enum):
    SC = "sc"
    TABLE1 = "table1"
    FULL = "full"

    @property
    def constraint_mode(self) -> Optional[ConstraintMode]:
        return {Model.TABLE1: ConstraintMode.TABLE1, Model.FULL: ConstraintMode.FULL}.get(self)


class StateSpaceExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class Event:
    """One committed instruction of an execution."""

    thread: int
    index: int  # position in the thread's unrolled instruction list
    label: str
    kind: str  # load | store | rmw | assign | check | cs_enter | cs_exit
    loc: Optional[str] = None
    read_value: Optional[int] = None
    written_value: Optional[int] = None
    read_order: Optional[MemoryOrder] = None
    write_order: Optional[MemoryOrder] = None

    @property
    def is_read(self) -> bool:
        return self.read_order is not None

    @property
    def is_write(self) -> bool:
        return self.write_order is not None

    def describe(self, thread_names) -> str:
        text = f"{thread_names[self.thread]}: {self.label}"
        if self.kind in ("load", "rmw", "check") and self.read_value is not None:
            text += f"  -> {self.read_value}"
        return text


@dataclass
class Execution:
    trace: tuple
    final: dict
    blocked: bool = False

    @property
    def reads_from(self) -> dict[int, int]:
        """Trace position of each read mapped to the write it read (-1: initial value)."""
        last: dict[str, int] = {}
        rf = {}
        for pos, ev in enumerate(self.trace):
            if ev.is_read:
                rf[pos] = last.get(ev.loc, -1)
            if ev.is_write:
                last[ev.loc] = pos
        return rf

    def format(self, thread_names) -> list[str]:
        return [ev.describe(thread_names) for ev in self.trace]


@dataclass
class Outcome:
    valuation: dict
    witness: Execution

    @property
    def key(self) -> tuple:
        return tuple(sorted(self.valuation.items()))


@dataclass
class OutcomeSet:
    program: Program
    model: Model
    unroll: int
    outcomes: dict = field(default_factory=dict)  # key -> Outcome
    blocked: int = 0
    blocked_witness: Optional[Execution] = None
    states: int = 0

    def valuations(self) -> set:
        return set(self.outcomes)

    def __eq__(self, other) -> bool:
        if not isinstance(other, OutcomeSet):
            return NotImplemented
        return self.valuations() == other.valuations()

    def __len__(self) -> int:
        return len(self.outcomes)

    def __iter__(self) -> Iterator[Outcome]:
        return iter(self.sorted())

    def sorted(self) -> list[Outcome]:
        return [self.outcomes[k] for k in sorted(self.outcomes)]

    def satisfying(self, cond) -> list[Outcome]:
        return [o for o in self.sorted() if cond.evaluate(o.valuation)]

    def to_json(self, witnesses: bool = True) -> str:
        names = [t.name for t in self.program.threads]
        doc = {
            "name": self.program.name,
            "model": self.model.value,
            "unroll": self.unroll,
            "blocked": self.blocked,
            "outcomes": [
                {"valuation": o.valuation, **({"witness": o.witness.format(names)} if witnesses else {})}
                for o in self.sorted()
            ],
        }
        return json.dumps(doc, sort_keys=True, indent=2)


class _Op:
    __slots__ = ("kind", "label", "loc", "locname", "dst", "fn", "fn2", "reads", "writes",
                 "access", "success", "failure", "order", "skip_to", "final", "body_start")

    def __init__(self, kind: str, label: str) -> None:
        self.kind = kind
        self.label = label
        self.loc = -1
        self.locname = None
        self.dst = -1
        self.fn = self.fn2 = None
        self.reads: frozenset = frozenset()
        self.writes: frozenset = frozenset()
        self.access = None
        self.order = self.success = self.failure = None
        self.skip_to = -1
        self.final = False
        self.body_start = -1


def _fmt(order: MemoryOrder) -> str:
    return "" if order is MemoryOrder.NOT_ATOMIC else f" @{order.value}"


class Machine:
    """A program compiled for enumeration under one model and unroll bound."""

    def __init__(self, program: Program, model: Model = Model.SC, unroll: int = DEFAULT_UNROLL) -> None:
        if unroll < 1:
            raise ValueError("unroll must be at least 1")
        program.validate()
        self.program = program
        self.model = model
        self.unroll = unroll
        self.regs = program.registers()
        self.reg_slot = {r: i for i, r in enumerate(self.regs)}
        self.locs = [loc.name for loc in program.locations]
        self.loc_slot = {n: i for i, n in enumerate(self.locs)}
        self.plain = [not loc.atomic for loc in program.locations]
        self.ghost = program.has_critical_sections()
        self.threads = [self._flatten(th.instrs) for th in program.threads]
        self.names = [th.name for th in program.threads]
        self.full = [(1 << len(ops)) - 1 for ops in self.threads]
        self.preds = [self._predecessors(ops) for ops in self.threads]
        self.local = [[j for j, op in enumerate(ops) if op.kind in ("assign", "check")] for ops in self.threads]

    # -- compilation ---------------------------------------------------
    def _flatten(self, instrs) -> list[_Op]:
        ops: list[_Op] = []
        self._emit(instrs, ops)
        return ops

    def _emit(self, instrs, ops: list[_Op]) -> None:
        for ins in instrs:
            if isinstance(ins, Loop):
                checks = []
                for it in range(self.unroll):
                    start = len(ops)
                    self._emit(ins.body, ops)
                    op = _Op("check", f"until {ins.until}  [iteration {it + 1}]")
                    op.fn = ins.until.compile(self.reg_slot)
                    op.reads = frozenset(self.reg_slot[n] for n in ins.until.names)
                    op.final = it == self.unroll - 1
                    op.body_start = start
                    checks.append(op)
                    ops.append(op)
                for op in checks:
                    op.skip_to = len(ops)
            else:
                ops.append(self._compile(ins))

    def _compile(self, ins) -> _Op:
        R = self.reg_slot
        if isinstance(ins, Load):
            op = _Op("load", f"load {ins.reg} = {ins.loc}{_fmt(ins.order)}")
            op.dst, op.order = R[ins.reg], ins.order
            op.writes = frozenset({op.dst})
            op.access = (AccessKind.LOAD, ins.order)
        elif isinstance(ins, Store):
            op = _Op("store", f"store {ins.loc} = {ins.value}{_fmt(ins.order)}")
            op.fn, op.order = ins.value.compile(R), ins.order
            op.reads = frozenset(R[n] for n in ins.value.names)
            op.access = (AccessKind.STORE, ins.order)
        elif isinstance(ins, Rmw):
            op = _Op("rmw", f"cas {ins.reg} = {ins.loc} ({ins.expected} -> {ins.new})"
                            f" @{ins.success.value}/{ins.failure.value}")
            op.dst = R[ins.reg]
            op.fn, op.fn2 = ins.expected.compile(R), ins.new.compile(R)
            op.success, op.failure = ins.success, ins.failure
            op.reads = frozenset(R[n] for n in ins.expected.names | ins.new.names)
            op.writes = frozenset({op.dst})
            op.access = (AccessKind.RMW, ins.success)
        elif isinstance(ins, Assign):
            op = _Op("assign", f"{ins.reg} = {ins.value}")
            op.dst, op.fn = R[ins.reg], ins.value.compile(R)
            op.reads = frozenset(R[n] for n in ins.value.names)
            op.writes = frozenset({op.dst})
        elif isinstance(ins, CsEnter):
            op = _Op("cs_enter", "cs_enter")
        elif isinstance(ins, CsExit):
            op = _Op("cs_exit", "cs_exit")
        else:
            raise TypeError(f"unknown instruction {ins!r}")
        if isinstance(ins, (Load, Store, Rmw)):
            op.loc = self.loc_slot[ins.loc]
            op.locname = ins.loc
        return op

    def _may_bypass(self, a: _Op, b: _Op) -> bool:
        """May ``b`` commit while the earlier ``a`` is still pending?"""
        mode = self.model.constraint_mode
        if mode is None:
            return False
        barriers = ("check", "cs_enter", "cs_exit")
        if a.kind in barriers or b.kind in ("cs_enter", "cs_exit"):
            return False
        if (a.writes & b.reads) or (b.writes & (a.reads | a.writes)):
            return False
        if a.loc >= 0 and a.loc == b.loc:
            return False
        if a.access is not None and b.access is not None:
            return reorder_allowed(a.access, b.access, mode)
        return True

    def _predecessors(self, ops: list[_Op]) -> list[int]:
        preds = []
        for j, b in enumerate(ops):
            mask = 0
            for i in range(j):
                if not self._may_bypass(ops[i], b):
                    mask |= 1 << i
            preds.append(mask)
        return preds

    # -- execution -----------------------------------------------------
    def initial(self, track_races: bool = False) -> tuple:
        n = len(self.threads)
        mem = tuple(loc.init for loc in self.program.locations)
        regs = (0,) * len(self.regs)
        races = None
        if track_races:
            vcs = tuple((0,) * n for _ in range(n))
            races = (vcs, (None,) * len(self.locs), ((),) * len(self.locs))
        return ((0,) * n, regs, mem, 0, 0, 0, races)

    def is_terminal(self, state) -> bool:
        return all(m == f for m, f in zip(state[0], self.full))

    def successors(self, state, found_races: Optional[set] = None, reduce: bool = False):
        """Yield ``(event, next_state)`` for every committable instruction.

        With ``reduce`` an enabled thread-local step (assignment or loop
        check), if any, is taken alone: it commutes with every other step
        and stays enabled, so the reachable terminal states are unchanged.
        """
        masks = state[0]
        if reduce:
            for t, ops in enumerate(self.threads):
                mask = masks[t]
                for j in self.local[t]:
                    if not mask >> j & 1 and not (self.preds[t][j] & ~mask):
                        yield self._commit(state, t, j, found_races)
                        return
        for t, ops in enumerate(self.threads):
            mask = masks[t]
            if mask == self.full[t]:
                continue
            preds = self.preds[t]
            for j in range(len(ops)):
                bit = 1 << j
                if mask & bit or (preds[j] & ~mask):
                    continue
                yield self._commit(state, t, j, found_races)

    def _commit(self, state, t: int, j: int, found_races):
        masks, regs, mem, blocked, holders, maxh, races = state
        op = self.threads[t][j]
        mask = masks[t] | (1 << j)
        kind = op.kind
        read_v = written = None
        r_ord = w_ord = None
        if kind == "load":
            read_v = mem[op.loc]
            regs = _put(regs, op.dst, read_v)
            r_ord = op.order
        elif kind == "store":
            written = op.fn(regs)
            mem = _put(mem, op.loc, written)
            w_ord = op.order
        elif kind == "rmw":
            read_v = mem[op.loc]
            ok = read_v == op.fn(regs)
            if ok:
                written = op.fn2(regs)
                w_ord = rmw_write_order(op.success)
            r_ord = rmw_read_order(op.success, op.failure, ok)
            regs = _put(regs, op.dst, read_v)
            if ok:
                mem = _put(mem, op.loc, written)
        elif kind == "assign":
            regs = _put(regs, op.dst, op.fn(regs))
        elif kind == "check":
            read_v = op.fn(regs)
            if read_v:
                for k in range(j + 1, op.skip_to):
                    mask |= 1 << k
            elif op.final:
                mask = self.full[t]
                blocked |= 1 << t
        elif kind == "cs_enter":
            holders += 1
            maxh = max(maxh, holders)
        elif kind == "cs_exit":
            holders -= 1
        if races is not None and op.loc >= 0:
            races = self._track(races, t, j, op, r_ord, w_ord, found_races)
        event = Event(t, j, op.label, kind, op.locname, read_v, written, r_ord, w_ord)
        new_masks = masks[:t] + (mask,) + masks[t + 1:]
        return event, (new_masks, regs, mem, blocked, holders, maxh, races)

    def _track(self, races, t, j, op, r_ord, w_ord, found):
        """Vector-clock bookkeeping for race detection (SC enumeration only).

        A thread's clock advances only at plain accesses and release-class
        writes, the only events whose ordering can matter for a race.
        Access history is kept for plain locations only (a race needs a
        plain access, and plain locations take only plain accesses) and is
        pruned once every other thread has synchronized past an entry.
        """
        vcs, sync, hist = races
        loc = op.loc
        vc = list(vcs[t])
        if r_ord is not None and is_acquire_class(r_ord) and sync[loc] is not None:
            vc = [max(a, b) for a, b in zip(vc, sync[loc])]
        plain = self.plain[loc]
        is_write = w_ord is not None
        if plain or (is_write and is_release_class(w_ord)):
            vc[t] += 1
        vc = tuple(vc)
        vcs = _put(vcs, t, vc)
        if is_write and not plain:
            sync = _put(sync, loc, vc if is_release_class(w_ord) else None)
        if plain:
            n = len(vcs)
            kept = []
            for entry in hist[loc]:
                u, epoch, w, ref = entry
                if u != t and (w or is_write) and epoch > vc[u] and found is not None:
                    found.add((op.locname, ref, (t, j)))
                if any(epoch > vcs[s][u] for s in range(n) if s != u):
                    kept.append(entry)
            kept.append((t, vc[t], is_write, (t, j)))
            hist = _put(hist, loc, tuple(kept))
        return (vcs, sync, hist)

    def valuation(self, state) -> dict:
        _, regs, mem, _, _, maxh, _ = state
        val = dict(zip(self.regs, regs))
        val.update(zip(self.locs, mem))
        if self.ghost:
            val[MAX_HOLDERS] = maxh
        return val

    def is_blocked(self, state) -> bool:
        return bool(state[3])


def _put(tup: tuple, i: int, v) -> tuple:
    return tup[:i] + (v,) + tup[i + 1:]


def explore(machine: Machine, *, max_states: int = DEFAULT_MAX_STATES,
            track_races: bool = False, on_terminal=None) -> tuple[int, set]:
    """Depth-first search over distinct states; calls ``on_terminal(state, path)``.

    Every reachable terminal state is reported exactly once, with the path
    by which it was first reached.
    """
    start = machine.initial(track_races)
    seen = {start}
    found: set = set()
    path: list[Event] = []
    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 10_000))

    def visit(state) -> None:
        terminal = True
        for event, nxt in machine.successors(state, found, reduce=True):
            terminal = False
            if nxt in seen:
                continue
            seen.add(nxt)
            if len(seen) > max_states:
                raise StateSpaceExceeded(f"more than {max_states} states")
            path.append(event)
            visit(nxt)
            path.pop()
        if terminal and on_terminal is not None:
            on_terminal(state, path)

    try:
        visit(start)
    finally:
        sys.setrecursionlimit(limit)
    return len(seen), found


def enumerate_outcomes(program: Program, model: Model = Model.SC, *, unroll: int = DEFAULT_UNROLL,
                       max_states: int = DEFAULT_MAX_STATES) -> OutcomeSet:
    """Exact set of final valuations reachable without blocking, with witnesses."""
    machine = Machine(program, model, unroll)
    result = OutcomeSet(program, model, unroll)

    def record(state, path) -> None:
        if machine.is_blocked(state):
            result.blocked += 1
            if result.blocked_witness is None:
                result.blocked_witness = Execution(tuple(path), machine.valuation(state), True)
            return
        val = machine.valuation(state)
        key = tuple(sorted(val.items()))
        if key not in result.outcomes:
            result.outcomes[key] = Outcome(val, Execution(tuple(path), val))

    result.states, _ = explore(machine, max_states=max_states, on_terminal=record)
    return result


def executions(program: Program, model: Model = Model.SC, *, unroll: int = DEFAULT_UNROLL,
               limit: int = 1_000_000) -> Iterator[Execution]:
    """Every complete execution (no state merging); for small programs and oracles."""
    machine = Machine(program, model, unroll)
    count = 0

    def walk(state, path):
        nonlocal count
        terminal = True
        for event, nxt in machine.successors(state):
            terminal = False
            path.append(event)
            yield from walk(nxt, path)
            path.pop()
        if terminal:
            count += 1
            if count > limit:
                raise StateSpaceExceeded(f"more than {limit} executions")
            yield Execution(tuple(path), machine.valuation(state), machine.is_blocked(state))

    yield from walk(machine.initial(), [])


@dataclass
class Progress:
    """Result of :func:`check_progress`."""

    states: int = 0
    blocked: int = 0
    stuck: int = 0
    witness: Optional[Execution] = None

    @property
    def ok(self) -> bool:
        return self.stuck == 0


def _retry_exits(machine: Machine, t: int, j: int, regs: tuple, mem: tuple) -> bool:
    """Would one more iteration of the loop whose last check ``j`` failed exit?

    The body is replayed alone against the final memory, so it answers
    whether the failure is an artefact of the unroll bound.
    """
    ops = machine.threads[t]
    regs, mem = list(regs), list(mem)
    k = ops[j].body_start
    while k < j:
        op = ops[k]
        if op.kind == "load":
            regs[op.dst] = mem[op.loc]
        elif op.kind == "store":
            mem[op.loc] = op.fn(regs)
        elif op.kind == "rmw":
            seen = mem[op.loc]
            if seen == op.fn(regs):
                mem[op.loc] = op.fn2(regs)
            regs[op.dst] = seen
        elif op.kind == "assign":
            regs[op.dst] = op.fn(regs)
        elif op.kind == "check":
            if op.fn(regs):
                k = op.skip_to
                continue
            if op.final:
                return False
        k += 1
    return bool(ops[j].fn(regs))


def check_progress(program: Program, model: Model = Model.SC, *, unroll: int = DEFAULT_UNROLL,
                   max_states: int = DEFAULT_MAX_STATES) -> Progress:
    """Look for executions that end with a thread spinning forever.

    Every blocked terminal state is examined: if each thread blocked in it
    would fail its loop again when rerun against the final memory (nobody
    else can still write), the state is a genuine deadlock or starvation
    and is counted as stuck. Blocked states where some spinner would exit
    on a further iteration only reflect the unroll bound.
    """
    machine = Machine(program, model, unroll)
    result = Progress()

    def record(state, path) -> None:
        blocked = state[3]
        if not blocked:
            return
        result.blocked += 1
        last = {}
        for ev in path:
            if ev.kind == "check":
                last[ev.thread] = ev.index
        _, regs, mem = state[:3]
        for t in range(len(machine.threads)):
            if blocked >> t & 1 and _retry_exits(machine, t, last[t], regs, mem):
                return
        result.stuck += 1
        if result.witness is None:
            result.witness = Execution(tuple(path), machine.valuation(state), True)

    result.states, _ = explore(machine, max_states=max_states, on_terminal=record)
    return result
