"""Operation histories and a brute-force linearizability check."""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Any, Callable, Optional


@dataclass(frozen=True)
class Operation:
    thread: int
    name: str
    arg: Any
    result: Any
    invoked: int
    returned: int


class History:
    """Thread-safe recorder of invocation and response times."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._clock = 0
        self.operations: list[Operation] = []

    def _tick(self) -> int:
        with self._lock:
            self._clock += 1
            return self._clock

    def call(self, thread: int, name: str, fn: Callable[..., Any], *args: Any) -> Any:
        """Invoke ``fn(*args)`` and record it as operation ``name``."""
        arg = args[0] if args else None
        start = self._tick()
        result = fn(*args)
        end = self._tick()
        with self._lock:
            self.operations.append(Operation(thread, name, arg, result, start, end))
        return result


def linearize(operations: list[Operation], model_factory: Callable[[], Any]) -> Optional[list[Operation]]:
    """Find a sequential order consistent with real time and the model.

    An operation may go next only if no other remaining operation returned
    before it was invoked. Returns a witness order or None. The model must
    offer ``apply(name, arg)`` and ``items`` (used as memo key).
    """
    ops = sorted(operations, key=lambda o: o.invoked)
    n = len(ops)
    failed: set = set()

    def search(remaining: frozenset, state: tuple) -> Optional[list[Operation]]:
        if not remaining:
            return []
        key = (remaining, state)
        if key in failed:
            return None
        earliest_return = min(ops[i].returned for i in remaining)
        for i in sorted(remaining):
            op = ops[i]
            if op.invoked > earliest_return:
                continue
            model = model_factory()
            model.items = list(state)
            if model.apply(op.name, op.arg) != op.result:
                continue
            rest = search(remaining - {i}, tuple(model.items))
            if rest is not None:
                return [op] + rest
        failed.add(key)
        return None

    return search(frozenset(range(n)), tuple(model_factory().items))


def is_linearizable(operations: list[Operation], model_factory: Callable[[], Any]) -> bool:
    return linearize(operations, model_factory) is not None
