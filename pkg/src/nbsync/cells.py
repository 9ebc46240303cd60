"""Synchronized and read-modify-write cells.

Every access is atomic. CPython exposes no hardware compare-and-swap, so
each cell serializes its own operations with a private lock held only for
the duration of a single load, store or exchange; no lock is ever held
across user code. Memory orders are validated and reported to the access
hook, but the interpreter itself executes every access sequentially
consistently.
"""

from __future__ import annotations

import enum
import threading
from dataclasses import dataclass
from typing import Any, Callable, Generic, Iterator, Optional, TypeVar

from .orderings import (
    MemoryOrder,
    OrderDefaults,
    validate_read_order,
    validate_rmw_pair,
    validate_write_order,
)

V = TypeVar("V")

INT_MIN = -(2**63)
INT_MAX = 2**64 - 1

AccessHook = Callable[["SyncCell", str, MemoryOrder], None]
_access_hook: Optional[AccessHook] = None


def set_access_hook(hook: Optional[AccessHook]) -> Optional[AccessHook]:
    """Install a process-wide callback invoked before every cell access.

    Returns the previous hook. Used by the interleaving explorer and by
    tests that observe effective orders.
    """
    global _access_hook
    previous, _access_hook = _access_hook, hook
    return previous


class UnsupportedValue(TypeError):
    """Value cannot be held in a single machine word."""


@dataclass(frozen=True, eq=False)
class TaggedRef:
    """A reference packed with a version tag, compared by identity and tag."""

    ref: Any
    tag: int = 0

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TaggedRef):
            return NotImplemented
        return self.ref is other.ref and self.tag == other.tag

    def __hash__(self) -> int:
        return hash((id(self.ref), self.tag))

    def bump(self, ref: Any) -> "TaggedRef":
        return TaggedRef(ref, self.tag + 1)


def check_word(value: Any) -> Any:
    if value is None or isinstance(value, (bool, float, enum.Enum, TaggedRef)):
        return value
    if isinstance(value, int):
        if not INT_MIN <= value <= INT_MAX:
            raise UnsupportedValue(f"integer {value} does not fit a machine word")
        return value
    raise UnsupportedValue(
        f"{type(value).__name__} values are not machine-word representable; "
        "use a scalar or a TaggedRef"
    )


@dataclass(frozen=True)
class Snapshot(Generic[V]):
    """The value observed at entry start or at the last failed exchange."""

    observed: V


class _Succeeded:
    __slots__ = ()

    def __bool__(self) -> bool:
        return True

    def __repr__(self) -> str:
        return "Succeeded"


Succeeded = _Succeeded()


@dataclass(frozen=True)
class Failed(Generic[V]):
    fresh: Snapshot[V]

    def __bool__(self) -> bool:
        return False


class SyncCell(Generic[V]):
    """An atomic variable with per-cell default read and write orders."""

    __slots__ = ("_value", "_lock", "defaults", "name", "owner", "__weakref__")

    def __init__(
        self,
        value: V,
        *,
        read: MemoryOrder = MemoryOrder.SEQ_CST,
        write: MemoryOrder = MemoryOrder.SEQ_CST,
        name: Optional[str] = None,
    ) -> None:
        self._init(value, OrderDefaults.sync(read, write), name)

    def _init(self, value: V, defaults: OrderDefaults, name: Optional[str]) -> None:
        self._value = check_word(value)
        self._lock = threading.Lock()
        self.defaults = defaults
        self.name = name
        self.owner: Any = None

    def __repr__(self) -> str:
        label = f" {self.name}" if self.name else ""
        return f"<{type(self).__name__}{label} value={self._value!r}>"

    def read(self, order: Optional[MemoryOrder] = None) -> V:
        order = self.defaults.read if order is None else validate_read_order(order)
        if _access_hook is not None:
            _access_hook(self, "read", order)
        with self._lock:
            return self._value

    def write(self, value: V, order: Optional[MemoryOrder] = None) -> None:
        order = validate_write_order(self.defaults.write if order is None else order)
        check_word(value)
        if _access_hook is not None:
            _access_hook(self, "write", order)
        with self._lock:
            self._value = value

    def peek(self) -> V:
        """Current value without an access event; for assertions only."""
        return self._value


class RmwCell(SyncCell[V]):
    """A synchronized cell whose writes are compare-and-exchange operations."""

    __slots__ = ("spurious",)

    def __init__(
        self,
        value: V,
        *,
        read: MemoryOrder = MemoryOrder.SEQ_CST,
        success: MemoryOrder = MemoryOrder.SEQ_CST,
        failure: MemoryOrder = MemoryOrder.SEQ_CST,
        name: Optional[str] = None,
    ) -> None:
        self._init(value, OrderDefaults(read, success, failure), name)
        # Fault injection: returns True to make a hardware attempt fail spuriously.
        self.spurious: Optional[Callable[[], bool]] = None

    def snapshot(self, order: Optional[MemoryOrder] = None) -> Snapshot[V]:
        return Snapshot(self.read(order))

    def exchange(
        self,
        snap: Snapshot[V],
        new_value: V,
        success: Optional[MemoryOrder] = None,
        failure: Optional[MemoryOrder] = None,
    ):
        """Replace the value with ``new_value`` iff it still equals ``snap.observed``.

        Returns ``Succeeded`` or ``Failed(fresh)`` where ``fresh`` holds the
        value that defeated the exchange. Spurious hardware failures never
        surface: the attempt is repeated until it either succeeds or sees a
        genuinely different value.
        """
        success = self.defaults.write_success if success is None else success
        failure = self.defaults.write_failure if failure is None else failure
        validate_rmw_pair(success, failure)
        check_word(new_value)
        if _access_hook is not None:
            _access_hook(self, "exchange", success)
        while True:
            with self._lock:
                current = self._value
                if current != snap.observed:
                    return Failed(Snapshot(current))
                if self.spurious is not None and self.spurious():
                    continue
                self._value = new_value
                return Succeeded


class SyncArray(Generic[V]):
    """A fixed-length array of synchronized cells sharing default orders."""

    def __init__(
        self,
        values,
        *,
        read: MemoryOrder = MemoryOrder.SEQ_CST,
        write: MemoryOrder = MemoryOrder.SEQ_CST,
        name: Optional[str] = None,
    ) -> None:
        if isinstance(values, int):
            raise TypeError("pass an iterable of initial values, e.g. [0] * n")
        self.name = name
        self._cells = tuple(
            SyncCell(v, read=read, write=write, name=f"{name}[{i}]" if name else None)
            for i, v in enumerate(values)
        )

    def __len__(self) -> int:
        return len(self._cells)

    def __getitem__(self, index: int) -> SyncCell[V]:
        return self._cells[index]

    def __iter__(self) -> Iterator[SyncCell[V]]:
        return iter(self._cells)

    @property
    def owner(self):
        return self._cells[0].owner if self._cells else None

    @owner.setter
    def owner(self, obj) -> None:
        for c in self._cells:
            c.owner = obj
