"""Happens-before, data races and the SC-for-DRF check."""

from __future__ import annotations

from dataclasses import dataclass

from ..orderings import is_acquire_class, is_release_class
from .machine import (
    DEFAULT_MAX_STATES,
    DEFAULT_UNROLL,
    Execution,
    Machine,
    Model,
    OutcomeSet,
    enumerate_outcomes,
    explore,
)
from .program import Program


def synchronizes_with(execution: Execution) -> set[tuple[int, int]]:
    """Release-class write -> acquire-class read that reads from it."""
    edges = set()
    for r, w in execution.reads_from.items():
        if w < 0:
            continue
        if is_release_class(execution.trace[w].write_order) and is_acquire_class(execution.trace[r].read_order):
            edges.add((w, r))
    return edges


def happens_before(execution: Execution) -> set[tuple[int, int]]:
    """Transitive closure of program order and synchronizes-with, over trace positions."""
    trace = execution.trace
    n = len(trace)
    succ = [0] * n
    for a in range(n):
        for b in range(n):
            if a != b and trace[a].thread == trace[b].thread and trace[a].index < trace[b].index:
                succ[a] |= 1 << b
    for w, r in synchronizes_with(execution):
        succ[w] |= 1 << r
    # Warshall over bitsets
    for k in range(n):
        bit = 1 << k
        reach_k = succ[k]
        for a in range(n):
            if succ[a] & bit:
                succ[a] |= reach_k
    return {(a, b) for a in range(n) for b in range(n) if succ[a] >> b & 1}


@dataclass(frozen=True, order=True)
class Race:
    loc: str
    first: tuple  # (thread name, instruction label)
    second: tuple

    def __str__(self) -> str:
        return f"{self.loc}: {self.first[0]} '{self.first[1]}' vs {self.second[0]} '{self.second[1]}'"

    def to_json(self) -> dict:
        return {"loc": self.loc, "first": list(self.first), "second": list(self.second)}


def races_in(execution: Execution, plain_locs) -> set[tuple]:
    """Conflicting, hb-unordered access pairs of one execution, as (loc, ref, ref)."""
    hb = happens_before(execution)
    trace = execution.trace
    found = set()
    for a in range(len(trace)):
        ea = trace[a]
        if ea.loc is None:
            continue
        for b in range(a + 1, len(trace)):
            eb = trace[b]
            if (eb.loc == ea.loc and eb.thread != ea.thread and (ea.is_write or eb.is_write)
                    and ea.loc in plain_locs and (a, b) not in hb and (b, a) not in hb):
                found.add((ea.loc, (ea.thread, ea.index), (eb.thread, eb.index)))
    return found


def _label(machine: Machine, ref) -> tuple:
    t, j = ref
    return (machine.names[t], machine.threads[t][j].label)


def detect_races(program: Program, *, unroll: int = DEFAULT_UNROLL,
                 max_states: int = DEFAULT_MAX_STATES) -> list[Race]:
    """All conflicting access pairs unordered by happens-before in some SC execution.

    Two accesses conflict when they touch the same location from different
    threads, at least one writes, and at least one is an ordinary
    (non-synchronized) access. An empty result means the program is
    data-race free.
    """
    machine = Machine(program, Model.SC, unroll)
    _, found = explore(machine, max_states=max_states, track_races=True)
    races = set()
    for loc, a, b in found:
        first, second = sorted([a, b])
        races.add(Race(loc, _label(machine, first), _label(machine, second)))
    return sorted(races)


class PreconditionViolated(RuntimeError):
    pass


@dataclass
class Verdict:
    sc: OutcomeSet
    relaxed: OutcomeSet

    @property
    def equal(self) -> bool:
        return self.sc.valuations() == self.relaxed.valuations()

    @property
    def only_relaxed(self) -> list[dict]:
        return [self.relaxed.outcomes[k].valuation for k in sorted(self.relaxed.valuations() - self.sc.valuations())]

    @property
    def only_sc(self) -> list[dict]:
        return [self.sc.outcomes[k].valuation for k in sorted(self.sc.valuations() - self.relaxed.valuations())]

    def __bool__(self) -> bool:
        return self.equal


def check_drf_sc(program: Program, *, model: Model = Model.TABLE1, unroll: int = DEFAULT_UNROLL,
                 max_states: int = DEFAULT_MAX_STATES) -> Verdict:
    """For a race-free program, compare relaxed and SC outcome sets."""
    races = detect_races(program, unroll=unroll, max_states=max_states)
    if races:
        raise PreconditionViolated(f"program has {len(races)} data race(s): {races[0]}")
    sc = enumerate_outcomes(program, Model.SC, unroll=unroll, max_states=max_states)
    relaxed = enumerate_outcomes(program, model, unroll=unroll, max_states=max_states)
    return Verdict(sc, relaxed)


__all__ = [
    "Race", "Verdict", "PreconditionViolated", "synchronizes_with", "happens_before",
    "races_in", "detect_races", "check_drf_sc",
]
