"""Run litmus programs exhaustively through the simulator or on real threads."""

from __future__ import annotations

import threading
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

from ..cells import RmwCell, SyncCell
from ..orderings import MemoryOrder
from ..simulator import (
    DEFAULT_MAX_STATES,
    Model,
    OutcomeSet,
    enumerate_outcomes,
)
from ..simulator.machine import Execution
from ..simulator.program import (
    MAX_HOLDERS,
    Assign,
    Clause,
    CsEnter,
    CsExit,
    Load,
    Loop,
    Program,
    Rmw,
    Store,
)
from ..simulator.relations import detect_races

EXHAUSTIVE = "exhaustive"
STRESS = "stress"
MODES = (EXHAUSTIVE, STRESS)
REPORT_FORMAT = 1

# A real spinner that has not exited after this many iterations is
# reported as blocked instead of hanging the run.
SPIN_LIMIT = 200_000


@dataclass
class ClauseVerdict:
    """How one postcondition clause fared."""

    clause: Clause
    holds: bool
    # Allowed: some final state satisfies the condition; Forbidden: none does.
    verdict: str
    witness: Optional[Execution] = None

    def describe(self, thread_names) -> list[str]:
        status = "ok" if self.holds else "VIOLATED"
        lines = [f"{self.clause.kind}: {self.clause.cond}  -> {self.verdict} ({status})"]
        if self.witness is not None:
            lines += ["  " + line for line in self.witness.format(thread_names)]
        return lines


@dataclass
class Report:
    program: Program
    model: Model
    mode: str
    unroll: int
    outcomes: Optional[OutcomeSet] = None
    races: list = field(default_factory=list)
    verdicts: list = field(default_factory=list)
    histogram: Counter = field(default_factory=Counter)
    iterations: int = 0
    stress_blocked: int = 0
    unexplained: list = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def thread_names(self) -> list[str]:
        return [t.name for t in self.program.threads]

    @property
    def ok(self) -> bool:
        return all(v.holds for v in self.verdicts) and not self.unexplained

    def observed(self) -> list[tuple[dict, int]]:
        return [(dict(k), n) for k, n in sorted(self.histogram.items())]


def _judge(clause: Clause, valuations) -> tuple[bool, Optional[int]]:
    for i, val in enumerate(valuations):
        if clause.cond.evaluate(val):
            return True, i
    return False, None


def verdicts_for(program: Program, outcomes: OutcomeSet) -> list[ClauseVerdict]:
    ordered = outcomes.sorted()
    result = []
    for clause in program.clauses:
        found, i = _judge(clause, [o.valuation for o in ordered])
        witness = ordered[i].witness if found else None
        holds = found if clause.kind == "exists" else not found
        result.append(ClauseVerdict(clause, holds, "Allowed" if found else "Forbidden", witness))
    return result


def _stress_verdicts(program: Program, histogram: Counter) -> list[ClauseVerdict]:
    # A real run samples executions: observing a forbidden state is a
    # violation, but not observing an `exists` state proves nothing.
    vals = [dict(k) for k in sorted(histogram)]
    result = []
    for clause in program.clauses:
        found, _ = _judge(clause, vals)
        if clause.kind == "exists":
            result.append(ClauseVerdict(clause, True, "Observed" if found else "Not observed"))
        else:
            result.append(ClauseVerdict(clause, not found, "Observed" if found else "Not observed"))
    return result


def run(program: Program, *, mode: str = EXHAUSTIVE, model: Model = Model.SC,
        iterations: int = 1000, unroll: int = 2, max_states: int = DEFAULT_MAX_STATES,
        check_subset: bool = True) -> Report:
    """Run ``program`` and judge its clauses.

    Stress mode also enumerates (unless ``check_subset`` is false) and
    lists any observed final state the enumeration does not allow.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    program.validate()
    start = time.perf_counter()
    report = Report(program, model, mode, unroll)
    if mode == EXHAUSTIVE or check_subset:
        report.outcomes = enumerate_outcomes(program, model, unroll=unroll, max_states=max_states)
    if mode == EXHAUSTIVE:
        report.races = sorted(detect_races(program, unroll=unroll, max_states=max_states))
        report.verdicts = verdicts_for(program, report.outcomes)
    else:
        report.iterations = iterations
        report.histogram, report.stress_blocked = stress(program, iterations)
        report.verdicts = _stress_verdicts(program, report.histogram)
        if report.outcomes is not None:
            allowed = report.outcomes.valuations()
            report.unexplained = [dict(k) for k in sorted(report.histogram) if k not in allowed]
    report.elapsed = time.perf_counter() - start
    return report


# -- stress mode -----------------------------------------------------------

class _Plain:
    """Unsynchronized storage for a ``plain`` location."""

    __slots__ = ("value",)

    def __init__(self, value) -> None:
        self.value = value


class _Blocked(Exception):
    pass


class _Env:
    """Cells, registers and critical-section bookkeeping for one run."""

    def __init__(self, program: Program) -> None:
        self.program = program
        self.cells = {}
        for loc in program.locations:
            if loc.kind == "plain":
                self.cells[loc.name] = _Plain(loc.init)
            elif loc.kind == "rmw":
                d = loc.defaults
                self.cells[loc.name] = RmwCell(loc.init, read=d.read, success=d.write_success,
                                               failure=d.write_failure, name=loc.name)
            else:
                self.cells[loc.name] = SyncCell(loc.init, read=loc.defaults.read,
                                                write=loc.defaults.write, name=loc.name)
        self.regs = {r: 0 for r in program.registers()}
        self.cs_lock = threading.Lock()
        self.holders = 0
        self.max_holders = 0
        self.blocked = False

    def reset(self) -> None:
        for loc in self.program.locations:
            cell = self.cells[loc.name]
            if isinstance(cell, _Plain):
                cell.value = loc.init
            else:
                cell.write(loc.init, MemoryOrder.SEQ_CST)
        for r in self.regs:
            self.regs[r] = 0
        self.holders = self.max_holders = 0
        self.blocked = False

    def valuation(self) -> tuple:
        val = dict(self.regs)
        for loc in self.program.locations:
            cell = self.cells[loc.name]
            val[loc.name] = cell.value if isinstance(cell, _Plain) else cell.peek()
        if self.program.has_critical_sections():
            val[MAX_HOLDERS] = self.max_holders
        return tuple(sorted(val.items()))

    # -- interpretation ------------------------------------------------
    def execute(self, instrs) -> None:
        regs = self.regs
        for ins in instrs:
            if isinstance(ins, Load):
                cell = self.cells[ins.loc]
                regs[ins.reg] = cell.value if isinstance(cell, _Plain) else cell.read(ins.order)
            elif isinstance(ins, Store):
                cell = self.cells[ins.loc]
                value = ins.value.evaluate(regs)
                if isinstance(cell, _Plain):
                    cell.value = value
                else:
                    cell.write(value, ins.order)
            elif isinstance(ins, Rmw):
                regs[ins.reg] = self._cas(ins)
            elif isinstance(ins, Assign):
                regs[ins.reg] = ins.value.evaluate(regs)
            elif isinstance(ins, Loop):
                spins = 0
                while True:
                    self.execute(ins.body)
                    if ins.until.evaluate(regs):
                        break
                    spins += 1
                    if spins >= SPIN_LIMIT:
                        raise _Blocked
                    time.sleep(0)
            elif isinstance(ins, CsEnter):
                with self.cs_lock:
                    self.holders += 1
                    self.max_holders = max(self.max_holders, self.holders)
            elif isinstance(ins, CsExit):
                with self.cs_lock:
                    self.holders -= 1

    def _cas(self, ins: Rmw):
        cell = self.cells[ins.loc]
        expected = ins.expected.evaluate(self.regs)
        new = ins.new.evaluate(self.regs)
        read = ins.success if ins.success in (MemoryOrder.ACQUIRE, MemoryOrder.SEQ_CST) else ins.failure
        while True:
            snap = cell.snapshot(read)
            if snap.observed != expected:
                return snap.observed
            if cell.exchange(snap, new, ins.success, ins.failure):
                return expected


def stress(program: Program, iterations: int) -> tuple[Counter, int]:
    """Execute ``program`` ``iterations`` times, one real thread per litmus thread.

    Returns the histogram of final valuations (blocked runs excluded) and
    the number of blocked runs.
    """
    env = _Env(program)
    n = len(program.threads)
    go = threading.Barrier(n + 1)
    done = threading.Barrier(n + 1)
    histogram: Counter = Counter()
    blocked = 0
    stop = False
    errors: list = []

    def worker(instrs) -> None:
        while True:
            try:
                go.wait()
            except threading.BrokenBarrierError:
                return
            if stop:
                return
            try:
                env.execute(instrs)
            except _Blocked:
                env.blocked = True
            except BaseException as exc:  # surfaced after join
                errors.append(exc)
            try:
                done.wait()
            except threading.BrokenBarrierError:
                return

    threads = [threading.Thread(target=worker, args=(t.instrs,), name=t.name, daemon=True)
               for t in program.threads]
    for th in threads:
        th.start()
    try:
        for _ in range(iterations):
            env.reset()
            go.wait()
            done.wait()
            if errors:
                raise errors[0]
            if env.blocked:
                blocked += 1
            else:
                histogram[env.valuation()] += 1
        stop = True
        go.wait()
    finally:
        go.abort()
        done.abort()
        for th in threads:
            th.join()
    return histogram, blocked
