"""Multi-threaded stress drivers shared by the tests and the command line."""

from __future__ import annotations

import threading
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Callable

from .api import read_modify_write
from .stack import EMPTY


def run_threads(bodies: list[Callable[[], Any]]) -> list:
    """Start all bodies together, join them, re-raise the first failure."""
    results: list = [None] * len(bodies)
    errors: list = []
    start = threading.Barrier(len(bodies))

    def worker(i: int) -> None:
        start.wait()
        try:
            results[i] = bodies[i]()
        except BaseException as exc:
            errors.append(exc)

    threads = [threading.Thread(target=worker, args=(i,)) for i in range(len(bodies))]
    for th in threads:
        th.start()
    for th in threads:
        th.join()
    if errors:
        raise errors[0]
    return results


@dataclass
class StackStress:
    pushed: Counter = field(default_factory=Counter)
    popped: Counter = field(default_factory=Counter)
    empty_pops: int = 0
    remaining: list = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def ok(self) -> bool:
        leftover = self.pushed - self.popped
        return (not (self.popped - self.pushed)
                and Counter(self.remaining) == leftover
                and len(self.remaining) == sum(self.pushed.values()) - sum(self.popped.values()))


def stack_stress(stack, threads: int = 4, pairs: int = 10_000) -> StackStress:
    """Each thread pushes unique elements and pops once after every push."""

    def body(t: int):
        popped, empties = [], 0
        for i in range(pairs):
            stack.push((t, i))
            got = stack.pop()
            if got is EMPTY:
                empties += 1
            else:
                popped.append(got)
        return popped, empties

    start = time.perf_counter()
    results = run_threads([lambda t=t: body(t) for t in range(threads)])
    out = StackStress(elapsed=time.perf_counter() - start)
    out.pushed = Counter((t, i) for t in range(threads) for i in range(pairs))
    for popped, empties in results:
        out.popped.update(popped)
        out.empty_pops += empties
    out.remaining = stack.to_list()
    return out


@dataclass
class CounterStress:
    expected: int
    final: int
    max_holders: int
    elapsed: float

    @property
    def ok(self) -> bool:
        return self.final == self.expected and self.max_holders <= 1


def lock_stress(lock, tasks: int, rounds: int) -> CounterStress:
    """``tasks`` threads each take ``lock`` ``rounds`` times and bump a plain counter."""
    state = {"count": 0, "holders": 0, "max": 0}

    def body(me: int) -> None:
        for _ in range(rounds):
            lock.lock(me)
            state["holders"] += 1
            state["max"] = max(state["max"], state["holders"])
            value = state["count"]
            state["count"] = value + 1
            state["holders"] -= 1
            lock.unlock(me)

    start = time.perf_counter()
    run_threads([lambda me=me: body(me) for me in range(tasks)])
    return CounterStress(tasks * rounds, state["count"], state["max"], time.perf_counter() - start)


def rmw_counter(cell, threads: int = 2, increments: int = 1000) -> int:
    """Increment ``cell`` from several threads through :func:`read_modify_write`."""

    def body() -> None:
        for _ in range(increments):
            read_modify_write(cell, lambda v: v + 1)

    run_threads([body] * threads)
    return cell.peek()
