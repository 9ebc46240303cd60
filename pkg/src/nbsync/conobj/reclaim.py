"""Counter-based memory reclamation for entries that unlink nodes.

A synchronized counter tracks how many tasks are inside the guarded entry.
Nodes unlinked while other tasks are inside go to a shared retire list;
whoever leaves the entry as the last task inside frees everything retired
so far, since no task that enters later can still reach an unlinked node.
"""

from __future__ import annotations

import threading
from typing import Any, Callable, Iterable, Optional

from ..cells import RmwCell, TaggedRef


class UseAfterFree(RuntimeError):
    pass


class DoubleFree(RuntimeError):
    pass


class Allocator:
    """Instrumented allocator: freed nodes are poisoned, not recycled."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self.allocated = 0
        self.freed = 0

    @property
    def live(self) -> int:
        return self.allocated - self.freed

    def new(self, factory: Callable[..., Any], *args) -> Any:
        node = factory(*args)
        node.freed = False
        with self._lock:
            self.allocated += 1
        return node

    def free(self, node) -> None:
        with self._lock:
            if node.freed:
                raise DoubleFree(repr(node))
            node.freed = True
            self.freed += 1

    @staticmethod
    def deref(node):
        if node.freed:
            raise UseAfterFree(f"access to freed node {node!r}")
        return node


class _Retired:
    __slots__ = ("node", "next")

    def __init__(self, node, next_) -> None:
        self.node = node
        self.next = next_


def _update(cell: RmwCell, fn: Callable[[Any], Any]) -> tuple[Any, Any]:
    snap = cell.snapshot()
    while True:
        new = fn(snap.observed)
        outcome = cell.exchange(snap, new)
        if outcome:
            return snap.observed, new
        snap = outcome.fresh


# The inside cell packs an entry counter above the number of tasks inside,
# so a drain cannot succeed if anyone entered since the drainer looked.
_COUNT_BITS = 24
_COUNT_MASK = (1 << _COUNT_BITS) - 1
_ENTRY_MASK = (1 << 40) - 1


def _entered(word: int) -> int:
    entries = ((word >> _COUNT_BITS) + 1) & _ENTRY_MASK
    return (entries << _COUNT_BITS) | ((word & _COUNT_MASK) + 1)


class ReclaimCounter:
    def __init__(self, allocator: Optional[Allocator] = None) -> None:
        self.inside = RmwCell(0, name="inside")
        self._retired = RmwCell(TaggedRef(None), name="retired")
        self.allocator = allocator or Allocator()
        self.max_inside = 0

    @property
    def count(self) -> int:
        """Tasks currently inside."""
        return self.inside.peek() & _COUNT_MASK

    def enter(self) -> None:
        _, now = _update(self.inside, _entered)
        if now & _COUNT_MASK > self.max_inside:
            self.max_inside = now & _COUNT_MASK

    def exit(self, unlinked: Iterable = ()) -> int:
        """Leave the entry; returns how many nodes were freed.

        Unlinked nodes join the shared retire list while the caller still
        counts as inside. A task that sees itself as the only one inside
        drains the list and frees the batch only if it then moves the
        counter from 1 to 0; if someone entered meanwhile the batch goes
        back. Whoever leaves last therefore frees everything retired.
        """
        batch = list(unlinked)
        if batch:
            def push(head: TaggedRef) -> TaggedRef:
                chain = head.ref
                for node in batch:
                    chain = _Retired(node, chain)
                return TaggedRef(chain, head.tag + 1)

            _update(self._retired, push)
        snap = self.inside.snapshot()
        while True:
            word = snap.observed
            if word & _COUNT_MASK != 1:
                outcome = self.inside.exchange(snap, word - 1)
                if outcome:
                    return 0
                snap = outcome.fresh
                continue
            old, _ = _update(self._retired, lambda head: TaggedRef(None, head.tag + 1))
            outcome = self.inside.exchange(snap, word - 1)
            if outcome:
                freed = 0
                chain = old.ref
                while chain is not None:
                    self.allocator.free(chain.node)
                    freed += 1
                    chain = chain.next
                return freed
            snap = outcome.fresh
            if old.ref is not None:
                drained = []
                chain = old.ref
                while chain is not None:
                    drained.append(chain.node)
                    chain = chain.next

                def restore(head: TaggedRef) -> TaggedRef:
                    chain = head.ref
                    for node in drained:
                        chain = _Retired(node, chain)
                    return TaggedRef(chain, head.tag + 1)

                _update(self._retired, restore)

    def pending(self) -> int:
        n, chain = 0, self._retired.peek().ref
        while chain is not None:
            n, chain = n + 1, chain.next
        return n


def with_reclamation(obj, entry_name: str, counter: Optional[ReclaimCounter] = None):
    """Wrap every call of ``entry_name`` with the inside-counter protocol.

    Nodes passed to ``Attempt.retire`` during a successful call are freed
    or deferred on exit.
    """
    if not any(name == entry_name for name, _ in obj.entries):
        raise KeyError(entry_name)
    counter = counter or obj.reclamation or ReclaimCounter()
    obj.reclamation = counter

    def wrapper(run):
        contexts = []
        counter.enter()
        try:
            return run(contexts.append)
        finally:
            counter.exit(contexts[0].retired if contexts else ())

    obj._wrappers[entry_name] = wrapper
    return obj
