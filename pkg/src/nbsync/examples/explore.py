"""Systematic exploration of thread schedules over cell accesses.

Worker threads run one at a time. Every cell access (through the access
hook) is a point where the controller may switch to another worker, and
the explorer enumerates the resulting schedules depth first by replaying
choice prefixes on fresh objects. Plain Python code between two accesses
runs without preemption, so it behaves as part of the preceding access.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Callable

from ..cells import set_access_hook
from ..conobj.tasks import configure_backoff


class _Abort(BaseException):
    """Unwinds a worker whose run was cut off."""


@dataclass
class Exploration:
    runs: int = 0
    complete: bool = True
    cut_off: int = 0
    results: list = field(default_factory=list)


class _Run:
    def __init__(self, bodies, prefix, preempt_on, max_steps) -> None:
        self.bodies = bodies
        self.prefix = prefix
        self.preempt_on = preempt_on
        self.max_steps = max_steps
        self.n = len(bodies)
        self.turn = [threading.Semaphore(0) for _ in bodies]
        self.back = threading.Semaphore(0)
        self.done = [False] * self.n
        self.results: list = [None] * self.n
        self.errors: list = []
        self.decisions: list[tuple[int, int]] = []
        self.abort = False
        self.me = threading.local()

    def hook(self, cell, op, order) -> None:
        i = getattr(self.me, "index", None)
        if i is None or (self.preempt_on is not None and cell not in self.preempt_on):
            return
        self.back.release()
        self.turn[i].acquire()
        if self.abort:
            raise _Abort

    def worker(self, i: int) -> None:
        self.me.index = i
        self.turn[i].acquire()
        try:
            if not self.abort:
                self.results[i] = self.bodies[i]()
        except _Abort:
            pass
        except BaseException as exc:
            self.errors.append(exc)
        finally:
            self.done[i] = True
            self.back.release()

    def execute(self) -> bool:
        """Run to completion; False if the step budget ran out."""
        threads = [threading.Thread(target=self.worker, args=(i,), daemon=True) for i in range(self.n)]
        for th in threads:
            th.start()
        steps = 0
        finished = True
        while True:
            enabled = [i for i in range(self.n) if not self.done[i]]
            if not enabled:
                break
            if steps >= self.max_steps:
                finished = False
                self.abort = True
                for i in enabled:
                    self.turn[i].release()
                    self.back.acquire()
                    while not self.done[i]:
                        self.turn[i].release()
                        self.back.acquire()
                break
            d = len(self.decisions)
            choice = self.prefix[d] if d < len(self.prefix) else 0
            self.decisions.append((choice, len(enabled)))
            self.turn[enabled[choice]].release()
            self.back.acquire()
            steps += 1
        for th in threads:
            th.join()
        return finished


def explore(setup: Callable[[], tuple], *, max_runs: int = 100_000,
            max_steps: int = 10_000) -> Exploration:
    """Enumerate every schedule of the workers produced by ``setup``.

    ``setup()`` builds fresh shared state and returns ``(bodies, finish)``
    or ``(bodies, finish, cells)``. ``finish(results)`` is called after
    each complete run with the workers' return values; whatever it returns
    is collected and anything it raises propagates. When ``cells`` is
    given, only accesses to those cells are switch points. Exceptions in
    workers propagate too.
    """
    old_backoff = configure_backoff(0.0, 0.0)
    result = Exploration()
    prefix: list[int] = []
    try:
        while True:
            scenario = setup()
            bodies, finish = scenario[:2]
            cells = set(scenario[2]) if len(scenario) > 2 else None
            run = _Run(bodies, prefix, cells, max_steps)
            previous = set_access_hook(run.hook)
            try:
                finished = run.execute()
            finally:
                set_access_hook(previous)
            result.runs += 1
            if run.errors:
                raise run.errors[0]
            if finished:
                result.results.append(finish(run.results))
            else:
                result.cut_off += 1
                result.complete = False
            # Backtrack: bump the deepest decision that still has an alternative.
            decisions = run.decisions
            while decisions and decisions[-1][0] + 1 >= decisions[-1][1]:
                decisions.pop()
            if not decisions:
                break
            prefix = [c for c, _ in decisions[:-1]] + [decisions[-1][0] + 1]
            if result.runs >= max_runs:
                result.complete = False
                break
    finally:
        configure_backoff(*old_backoff)
    return result
