"""Concurrent objects: guarded entries with optimistic, retrying bodies.

An entry body is split into *once* stages, which run only on the first
try, and *retry* stages, which are restarted whenever the exchange on the
entry's governing read-modify-write cell fails. Staging is declared by the
caller because a library cannot see which statements depend on the
governing cell.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Optional, Union

from ..cells import Failed, RmwCell, Snapshot, SyncArray, SyncCell
from ..orderings import MemoryOrder
from .tasks import LoopKind, SyncLoop


class EntryError(Exception):
    pass


class ForeignCell(EntryError):
    pass


class DuplicateEntry(EntryError):
    pass


class StageViolation(EntryError):
    pass


class UnknownEntry(EntryError, LookupError):
    pass


class PrivateEntry(EntryError):
    pass


CellRef = Union[str, SyncCell, SyncArray]


@dataclass(frozen=True)
class BooleanGuard:
    """Guard evaluated over the object's synchronized cells.

    ``predicate`` receives a :class:`GuardView`; ``reads`` lists the cells
    (by name or object) it may look at. An empty ``reads`` means the guard
    is constant.
    """

    predicate: Callable[["GuardView"], bool]
    reads: tuple[CellRef, ...] = ()


@dataclass(frozen=True)
class RmwGuard:
    """``X = X'OLD`` guard on the governing cell ``cell``."""

    cell: str


TRUE_GUARD = BooleanGuard(lambda view: True)
Guard = Union[BooleanGuard, RmwGuard]


@dataclass(frozen=True)
class Stage:
    body: Callable[["Attempt"], Any]
    reads_governing_snapshot: bool = False
    exchanges: tuple[str, ...] = ()


@dataclass(frozen=True)
class EntrySpec:
    name: str
    guard: Guard = TRUE_GUARD
    once: tuple = ()
    retry: tuple = ()
    index: Optional[int] = None
    private: bool = False

    @property
    def key(self) -> tuple[str, Optional[int]]:
        return (self.name, self.index)

    @property
    def governing(self) -> Optional[str]:
        return self.guard.cell if isinstance(self.guard, RmwGuard) else None

    def stages(self) -> tuple[tuple[Stage, ...], tuple[Stage, ...]]:
        gov = self.governing
        once = tuple(s if isinstance(s, Stage) else Stage(s) for s in self.once)
        retry = tuple(
            s if isinstance(s, Stage)
            else Stage(s, reads_governing_snapshot=gov is not None, exchanges=(gov,) if gov else ())
            for s in self.retry
        )
        return once, retry


class GuardView:
    """Read-only access to an object's cells using their default read orders."""

    def __init__(self, obj: "ConcurrentObject", allowed: Optional[frozenset], index: Optional[int]) -> None:
        self._obj = obj
        self._allowed = allowed
        self.index = index

    def __getattr__(self, name: str):
        if name.startswith("_"):
            raise AttributeError(name)
        if self._allowed is not None and name not in self._allowed:
            raise ForeignCell(f"guard reads undeclared cell {name!r}")
        cell = self._obj.cell(name)
        if isinstance(cell, SyncArray):
            return _ArrayView(cell)
        return cell.read()

    def load(self, name: str, index: Optional[int] = None, order: Optional[MemoryOrder] = None):
        """Read a declared cell (or array element) with an explicit order."""
        if self._allowed is not None and name not in self._allowed:
            raise ForeignCell(f"guard reads undeclared cell {name!r}")
        cell = self._obj.cell(name)
        if isinstance(cell, SyncArray):
            cell = cell[index]
        return cell.read(order)


class _ArrayView:
    def __init__(self, array: SyncArray) -> None:
        self._array = array

    def __getitem__(self, i: int):
        return self._array[i].read()

    def __len__(self) -> int:
        return len(self._array)


class _Restart(Exception):
    """Governing exchange failed; restart the retry stages."""


class Attempt:
    """Execution context handed to every stage of one entry call."""

    def __init__(self, obj: "ConcurrentObject", spec: EntrySpec, args, kwargs) -> None:
        self.obj = obj
        self.spec = spec
        self.args = args
        self.kwargs = kwargs
        self.index = spec.index
        self.local: dict[str, Any] = {}
        self.snapshot: Optional[Snapshot] = None
        self.attempt = 1
        self.retired: list = []
        self._in_once = False

    def cell(self, name: str):
        return self.obj.cell(name)

    def read(self, name: str, order: Optional[MemoryOrder] = None):
        return self.obj.cell(name).read(order)

    def write(self, name: str, value, order: Optional[MemoryOrder] = None) -> None:
        self.obj.cell(name).write(value, order)

    def exchange(self, new_value, success: Optional[MemoryOrder] = None,
                 failure: Optional[MemoryOrder] = None) -> None:
        """Exchange on the governing cell against the current snapshot.

        Returns normally on success; on failure the snapshot is refreshed
        and the retry stages start over.
        """
        gov = self.spec.governing
        if gov is None:
            raise StageViolation(f"entry {self.spec.name!r} has no governing read-modify-write cell")
        if self._in_once:
            raise StageViolation("once-stages must not exchange the governing cell")
        outcome = self.obj.cell(gov).exchange(self.snapshot, new_value, success, failure)
        if isinstance(outcome, Failed):
            self.snapshot = outcome.fresh
            raise _Restart

    def retire(self, node) -> None:
        """Hand an unlinked node to the object's reclamation scheme."""
        self.retired.append(node)

    def call(self, name: str, *args, index: Optional[int] = None, **kwargs):
        return self.obj._call(name, index, args, kwargs, internal=True)


class ConcurrentObject:
    """A set of synchronized cells plus entries that run in parallel."""

    def __init__(self, name: str = "object") -> None:
        self.name = name
        self.cells: dict[str, Union[SyncCell, SyncArray]] = {}
        self.entries: dict[tuple[str, Optional[int]], EntrySpec] = {}
        self._stages: dict[tuple[str, Optional[int]], tuple] = {}
        self.reclamation = None
        self._wrappers: dict[str, Any] = {}

    def add_cell(self, name: str, cell):
        if name in self.cells:
            raise ValueError(f"cell {name!r} already declared")
        if cell.owner is not None and cell.owner is not self:
            raise ForeignCell(f"cell {name!r} already belongs to another object")
        cell.owner = self
        if cell.name is None:
            cell.name = name
        self.cells[name] = cell
        return cell

    def sync(self, name: str, value, **orders) -> SyncCell:
        return self.add_cell(name, SyncCell(value, name=name, **orders))

    def rmw(self, name: str, value, **orders) -> RmwCell:
        return self.add_cell(name, RmwCell(value, name=name, **orders))

    def array(self, name: str, values, **orders) -> SyncArray:
        return self.add_cell(name, SyncArray(values, name=name, **orders))

    def cell(self, name: str):
        try:
            return self.cells[name]
        except KeyError:
            raise ForeignCell(f"{self.name} has no cell {name!r}") from None

    def _owned(self, ref: CellRef) -> str:
        if isinstance(ref, str):
            if ref not in self.cells:
                raise ForeignCell(f"{self.name} has no cell {ref!r}")
            return ref
        for name, cell in self.cells.items():
            if cell is ref:
                return name
        raise ForeignCell(f"{ref!r} does not belong to {self.name}")

    def register(self, spec: EntrySpec) -> EntrySpec:
        if spec.key in self.entries:
            raise DuplicateEntry(f"entry {spec.name!r} (index {spec.index}) already registered")
        once, retry = spec.stages()
        gov = spec.governing
        if isinstance(spec.guard, BooleanGuard):
            reads = frozenset(self._owned(r) for r in spec.guard.reads)
        else:
            reads = None
            self._owned(gov)
            if not isinstance(self.cells[gov], RmwCell):
                raise StageViolation(f"governing cell {gov!r} is not a read-modify-write cell")
        for stage in once:
            if gov is not None and (gov in stage.exchanges or stage.reads_governing_snapshot):
                raise StageViolation(
                    f"once-stage of {spec.name!r} depends on governing cell {gov!r}"
                )
        exchanged = {c for stage in retry for c in stage.exchanges}
        for c in exchanged:
            self._owned(c)
        if len(exchanged) > 1 or (exchanged and exchanged != {gov}):
            raise StageViolation(
                f"retry stages of {spec.name!r} may only exchange the governing cell, got {sorted(exchanged)}"
            )
        self.entries[spec.key] = spec
        self._stages[spec.key] = (once, retry, reads)
        return spec

    def call(self, name: str, *args, index: Optional[int] = None, **kwargs):
        return self._call(name, index, args, kwargs, internal=False)

    def _call(self, name, index, args, kwargs, internal: bool):
        key = (name, index)
        try:
            spec = self.entries[key]
        except KeyError:
            raise UnknownEntry(f"{self.name} has no entry {name!r} with index {index}") from None
        if spec.private and not internal:
            raise PrivateEntry(f"entry {name!r} is private to {self.name}")
        wrapper = self._wrappers.get(name)
        if wrapper is not None:
            return wrapper(lambda ctx_hook: self._execute(spec, args, kwargs, ctx_hook))
        return self._execute(spec, args, kwargs, None)

    def _execute(self, spec: EntrySpec, args, kwargs, ctx_hook):
        once, retry, reads = self._stages[spec.key]
        ctx = Attempt(self, spec, args, kwargs)
        if ctx_hook is not None:
            ctx_hook(ctx)
        result = None
        if isinstance(spec.guard, BooleanGuard):
            view = GuardView(self, reads if spec.guard.reads else frozenset(), spec.index)
            with SyncLoop(LoopKind.GUARD) as loop:
                while not spec.guard.predicate(view):
                    loop.retry()
            for stage in once + retry:
                result = stage.body(ctx)
            return result
        gov_cell: RmwCell = self.cells[spec.guard.cell]
        ctx.snapshot = gov_cell.snapshot()
        ctx._in_once = True
        for stage in once:
            result = stage.body(ctx)
        ctx._in_once = False
        with SyncLoop(LoopKind.RMW) as loop:
            while True:
                try:
                    for stage in retry:
                        result = stage.body(ctx)
                    return result
                except _Restart:
                    ctx.retired.clear()
                    ctx.attempt += 1
                    loop.retry()


def register_entry(obj: ConcurrentObject, spec: EntrySpec) -> EntrySpec:
    return obj.register(spec)


def call_entry(obj: ConcurrentObject, name: str, *args, index: Optional[int] = None, **kwargs):
    return obj.call(name, *args, index=index, **kwargs)
