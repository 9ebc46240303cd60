"""One-shot release/acquire handoff of an unsynchronized payload."""

from __future__ import annotations

from typing import Any

from ..conobj import BooleanGuard, ConcurrentObject, EntrySpec
from ..orderings import MemoryOrder


class ReleaseAcquireBox:
    """The producer stores the payload, then publishes it with a release write.

    Readers wait in a guard sync loop until an acquire read of the flag
    returns true, after which the plain payload is safe to read.
    """

    def __init__(self) -> None:
        self.data: Any = None
        self.obj = ConcurrentObject("box")
        self.flag = self.obj.sync("flag", False, read=MemoryOrder.ACQUIRE, write=MemoryOrder.RELEASE)
        self.obj.register(EntrySpec("Write", once=(self._store,)))
        self.obj.register(EntrySpec(
            "Read",
            guard=BooleanGuard(lambda view: view.flag, reads=("flag",)),
            once=(lambda ctx: self.data,),
        ))

    def _store(self, ctx) -> None:
        if self.flag.peek():
            raise RuntimeError("box is one-shot and already written")
        self.data = ctx.args[0]
        self.flag.write(True)

    def write(self, value: Any) -> None:
        self.obj.call("Write", value)

    def read(self) -> Any:
        return self.obj.call("Read")
