"""Task states and sync-loop bookkeeping.

A task enters ``IN_SYNC_LOOP`` only after its sync loop has failed often
enough that immediate success is unlikely: from the second iteration of a
guard spin loop, from the third iteration of an exchange retry loop.
"""

from __future__ import annotations

import enum
import itertools
import threading
import time
from typing import Optional


class TaskState(enum.Enum):
    RUNNABLE = "runnable"
    IN_SYNC_LOOP = "in_sync_loop"


class LoopKind(enum.Enum):
    GUARD = "guard"
    RMW = "rmw"


THRESHOLDS = {LoopKind.GUARD: 2, LoopKind.RMW: 3}

_ids = itertools.count(1)


class Task:
    """Scheduling record of one task (a thread, or a scheduler-managed job)."""

    def __init__(self, name: Optional[str] = None) -> None:
        self.id = next(_ids)
        self.name = name or f"task-{self.id}"
        self.state = TaskState.RUNNABLE
        # (iteration, new state, loop kind) for every state change
        self.transitions: list[tuple[int, TaskState, LoopKind]] = []
        self.scheduler = None

    def __repr__(self) -> str:
        return f"<Task {self.name} {self.state.value}>"


_local = threading.local()


def current_task() -> Task:
    task = getattr(_local, "task", None)
    if task is None:
        task = _local.task = Task(threading.current_thread().name)
    return task


def bind_task(task: Optional[Task]) -> None:
    _local.task = task


def get_task_state(task: Optional[Task] = None) -> TaskState:
    return (task or current_task()).state


def set_task_state(task: Optional[Task], state: TaskState, *, iteration: int = 0,
                   kind: LoopKind = LoopKind.GUARD) -> None:
    task = task or current_task()
    if task.state is not state:
        task.state = state
        task.transitions.append((iteration, state, kind))


# Exponential backoff once a task is in a sync loop; (base, cap) in seconds.
_backoff = [1e-6, 1e-3]


def configure_backoff(base: float, cap: float) -> tuple[float, float]:
    old = tuple(_backoff)
    _backoff[:] = [base, cap]
    return old


class SyncLoop:
    """Iteration counter for one sync loop; use as a context manager.

    The loop body runs once per iteration; call :meth:`retry` before every
    iteration after the first.
    """

    def __init__(self, kind: LoopKind, task: Optional[Task] = None) -> None:
        self.kind = kind
        self.task = task or current_task()
        self.iteration = 1

    def __enter__(self) -> "SyncLoop":
        return self

    def __exit__(self, *exc) -> None:
        set_task_state(self.task, TaskState.RUNNABLE, iteration=self.iteration, kind=self.kind)

    def retry(self) -> None:
        self.iteration += 1
        if self.iteration == THRESHOLDS[self.kind]:
            set_task_state(self.task, TaskState.IN_SYNC_LOOP, iteration=self.iteration, kind=self.kind)
        self.pause()

    def pause(self) -> None:
        task = self.task
        if task.scheduler is not None:
            task.scheduler.checkpoint(task)
        base, cap = _backoff
        if task.state is TaskState.IN_SYNC_LOOP and base > 0:
            spins = self.iteration - THRESHOLDS[self.kind]
            time.sleep(min(cap, base * (2 ** min(spins, 30))))
        else:
            time.sleep(0)
