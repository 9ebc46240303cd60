"""Worker-pool scheduling that keeps spinning tasks from starving runnable ones.

Both the threaded :class:`Scheduler` and the deterministic
:func:`simulate_rounds` use :func:`pick`: runnable tasks are admitted before
tasks in a sync loop, and a spinning task gives up its worker at every
iteration when somebody else is waiting. While a runnable task is ready,
spinners therefore never hold all workers for longer than one iteration.
"""

from __future__ import annotations

import threading
from collections import deque
from typing import Any, Callable, Iterator, Optional, Sequence

from .tasks import Task, TaskState, bind_task


def pick(waiting: Sequence[Task], free_slots: int) -> list[Task]:
    """Choose which waiting tasks get the free workers, runnable ones first."""
    if free_slots <= 0:
        return []
    runnable = [t for t in waiting if t.state is TaskState.RUNNABLE]
    spinning = [t for t in waiting if t.state is not TaskState.RUNNABLE]
    return (runnable + spinning)[:free_slots]


class ScheduledTask(Task):
    def __init__(self, fn: Callable[..., Any], args, kwargs, name: Optional[str]) -> None:
        super().__init__(name)
        self.fn, self.args, self.kwargs = fn, args, kwargs
        self.result: Any = None
        self.error: Optional[BaseException] = None
        self.done = threading.Event()
        self.thread: Optional[threading.Thread] = None


class Scheduler:
    """Runs tasks on real threads, at most ``workers`` of them at a time."""

    def __init__(self, workers: int) -> None:
        if workers < 1:
            raise ValueError("a scheduler needs at least one worker")
        self.workers = workers
        self._cond = threading.Condition()
        self._waiting: deque[ScheduledTask] = deque()
        self._running: set[ScheduledTask] = set()
        self._admitted: set[ScheduledTask] = set()
        self.tasks: list[ScheduledTask] = []
        self.max_spinners_with_runnable_waiting = 0

    def spawn(self, fn: Callable[..., Any], *args, name: Optional[str] = None, **kwargs) -> ScheduledTask:
        task = ScheduledTask(fn, args, kwargs, name)
        task.scheduler = self
        task.thread = threading.Thread(target=self._run, args=(task,), name=task.name, daemon=True)
        self.tasks.append(task)
        task.thread.start()
        return task

    def join(self, timeout: Optional[float] = None) -> None:
        for task in self.tasks:
            task.thread.join(timeout)

    def running(self) -> list[Task]:
        with self._cond:
            return list(self._running)

    def _run(self, task: ScheduledTask) -> None:
        bind_task(task)
        self._acquire(task)
        try:
            task.result = task.fn(*task.args, **task.kwargs)
        except BaseException as exc:  # surfaced through task.error
            task.error = exc
        finally:
            self._release(task)
            task.done.set()

    def _acquire(self, task: ScheduledTask) -> None:
        with self._cond:
            self._waiting.append(task)
            self._dispatch()
            while task not in self._admitted:
                self._cond.wait()
            self._admitted.discard(task)

    def _release(self, task: ScheduledTask) -> None:
        with self._cond:
            self._running.discard(task)
            self._dispatch()

    def _dispatch(self) -> None:
        chosen = pick(self._waiting, self.workers - len(self._running))
        for t in chosen:
            self._waiting.remove(t)
            self._running.add(t)
            self._admitted.add(t)
        if self._waiting and any(t.state is TaskState.RUNNABLE for t in self._waiting):
            spinners = sum(t.state is TaskState.IN_SYNC_LOOP for t in self._running)
            self.max_spinners_with_runnable_waiting = max(self.max_spinners_with_runnable_waiting, spinners)
        if chosen:
            self._cond.notify_all()

    def checkpoint(self, task: Task) -> None:
        """Called by a spinning task between sync-loop iterations."""
        with self._cond:
            if not self._waiting or task not in self._running:
                return
            self._running.discard(task)
            self._waiting.append(task)
            self._dispatch()
            while task not in self._admitted:
                self._cond.wait()
            self._admitted.discard(task)


class SimTask(Task):
    """A task for :func:`simulate_rounds`.

    ``steps`` yields the task's state after each step and stops when the
    task completes.
    """

    def __init__(self, name: str, steps: Iterator[TaskState]) -> None:
        super().__init__(name)
        self.steps = steps
        self.finished_round: Optional[int] = None


def simulate_rounds(workers: int, tasks: Sequence[SimTask], max_rounds: int = 10_000) -> list[list[str]]:
    """Deterministic round-based scheduling; returns the names run per round."""
    queue = deque(tasks)
    log: list[list[str]] = []
    for rnd in range(1, max_rounds + 1):
        if not queue:
            break
        chosen = pick(list(queue), workers)
        for t in chosen:
            queue.remove(t)
        for t in chosen:
            try:
                t.state = next(t.steps)
            except StopIteration:
                t.finished_round = rnd
                continue
            queue.append(t)
        log.append([t.name for t in chosen])
    return log
