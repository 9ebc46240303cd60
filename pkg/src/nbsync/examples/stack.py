"""LIFO stacks: the concurrent-object stack, a mutex baseline and an API-based stack."""

from __future__ import annotations

import threading
from typing import Any, Optional

from ..cells import TaggedRef
from ..conobj import (
    Allocator,
    ConcurrentObject,
    EntrySpec,
    ReclaimCounter,
    RmwGuard,
    Stage,
    with_reclamation,
)
from ..orderings import MemoryOrder
from .api import read_modify_write


class _Empty:
    __slots__ = ()

    def __repr__(self) -> str:
        return "EMPTY"

    def __reduce__(self):
        return "EMPTY"


EMPTY = _Empty()


class Node:
    __slots__ = ("element", "next", "freed")

    def __init__(self, element: Any) -> None:
        self.element = element
        self.next: Optional[Node] = None
        self.freed = False

    def __repr__(self) -> str:
        return f"Node({self.element!r})"


def _chain(top: Optional[Node]) -> list:
    items, seen = [], set()
    while top is not None:
        if id(top) in seen:
            raise AssertionError("cycle in node chain")
        seen.add(id(top))
        items.append(Allocator.deref(top).element)
        top = top.next
    return items


class NonBlockingStack:
    """Stack as a concurrent object governed by the ``head`` cell.

    ``head`` holds a :class:`TaggedRef` whose tag grows on every successful
    exchange, so a recycled top node cannot be mistaken for an unchanged
    head. Popped nodes are reclaimed with the inside-counter scheme.
    """

    def __init__(self, allocator: Optional[Allocator] = None,
                 on_push_once=None) -> None:
        self.allocator = allocator or Allocator()
        self.obj = ConcurrentObject("stack")
        self.head = self.obj.rmw("head", TaggedRef(None), read=MemoryOrder.ACQUIRE,
                                 success=MemoryOrder.RELEASE, failure=MemoryOrder.RELAXED)
        self._on_push_once = on_push_once
        self.obj.register(EntrySpec(
            "Push",
            guard=RmwGuard("head"),
            once=(self._allocate,),
            retry=(Stage(self._link, reads_governing_snapshot=True, exchanges=("head",)),),
        ))
        self.obj.register(EntrySpec(
            "Pop",
            guard=RmwGuard("head"),
            retry=(Stage(self._unlink, reads_governing_snapshot=True, exchanges=("head",)),),
        ))
        self.counter = ReclaimCounter(self.allocator)
        with_reclamation(self.obj, "Pop", self.counter)

    # -- stages --------------------------------------------------------
    def _allocate(self, ctx) -> None:
        if self._on_push_once is not None:
            self._on_push_once()
        ctx.local["node"] = self.allocator.new(Node, ctx.args[0])

    def _link(self, ctx) -> None:
        node = ctx.local["node"]
        top = ctx.snapshot.observed
        node.next = top.ref
        ctx.exchange(top.bump(node), MemoryOrder.RELEASE, MemoryOrder.RELAXED)

    def _unlink(self, ctx):
        top = ctx.snapshot.observed
        if top.ref is None:
            return EMPTY
        node = Allocator.deref(top.ref)
        element, nxt = node.element, node.next
        ctx.exchange(top.bump(nxt), MemoryOrder.ACQUIRE, MemoryOrder.ACQUIRE)
        ctx.retire(node)
        return element

    # -- interface -----------------------------------------------------
    def push(self, element: Any) -> None:
        self.obj.call("Push", element)

    def pop(self) -> Any:
        return self.obj.call("Pop")

    def to_list(self) -> list:
        """Elements from top to bottom; only meaningful when quiescent."""
        return _chain(self.head.peek().ref)

    def __len__(self) -> int:
        return len(self.to_list())


class LockedStack:
    """The blocking baseline: every operation under one mutex."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._items: list = []

    def push(self, element: Any) -> None:
        with self._lock:
            self._items.append(element)

    def pop(self) -> Any:
        with self._lock:
            return self._items.pop() if self._items else EMPTY

    def to_list(self) -> list:
        with self._lock:
            return self._items[::-1]

    def __len__(self) -> int:
        return len(self.to_list())


class ApiStack:
    """Stack written only against :func:`read_modify_write`."""

    def __init__(self, allocator: Optional[Allocator] = None) -> None:
        from ..cells import RmwCell

        self.allocator = allocator or Allocator()
        self.head = RmwCell(TaggedRef(None), read=MemoryOrder.ACQUIRE, name="head")
        self.counter = ReclaimCounter(self.allocator)

    def push(self, element: Any) -> None:
        node = self.allocator.new(Node, element)

        def link(top: TaggedRef) -> TaggedRef:
            node.next = top.ref
            return top.bump(node)

        read_modify_write(self.head, link, MemoryOrder.RELEASE, MemoryOrder.RELAXED)

    def pop(self) -> Any:
        taken: list = [None]

        def unlink(top: TaggedRef) -> TaggedRef:
            if top.ref is None:
                taken[0] = None
                return top
            node = Allocator.deref(top.ref)
            taken[0] = (node, node.element)
            return top.bump(node.next)

        self.counter.enter()
        retired = ()
        try:
            read_modify_write(self.head, unlink, MemoryOrder.ACQUIRE, MemoryOrder.ACQUIRE)
            if taken[0] is None:
                return EMPTY
            node, element = taken[0]
            retired = (node,)
            return element
        finally:
            self.counter.exit(retired)

    def to_list(self) -> list:
        return _chain(self.head.peek().ref)

    def __len__(self) -> int:
        return len(self.to_list())


class SequentialStack:
    """Reference model for linearizability checks."""

    def __init__(self, items=()) -> None:
        self.items = list(items)

    def apply(self, op: str, arg: Any = None) -> Any:
        if op == "push":
            self.items.append(arg)
            return None
        if op == "pop":
            return self.items.pop() if self.items else EMPTY
        raise ValueError(op)
