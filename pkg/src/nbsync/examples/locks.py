"""Peterson's two-task lock and the n-task filter lock on synchronized cells."""

from __future__ import annotations

from ..conobj import BooleanGuard, ConcurrentObject, EntrySpec
from ..orderings import MemoryOrder

SC = MemoryOrder.SEQ_CST
ACQ = MemoryOrder.ACQUIRE
REL = MemoryOrder.RELEASE

PETERSON_VARIANTS = ("sc", "ra_defaults", "ra_explicit")


class PetersonLock:
    """Two-task mutual exclusion.

    ``variant`` picks the annotations: ``sc`` uses sequentially consistent
    cells; ``ra_defaults`` declares release writes and acquire reads on the
    cells; ``ra_explicit`` keeps SC declarations and requests release and
    acquire on each statement instead.
    """

    def __init__(self, variant: str = "sc") -> None:
        if variant not in PETERSON_VARIANTS:
            raise ValueError(f"unknown variant {variant!r}")
        self.variant = variant
        decl = dict(read=ACQ, write=REL) if variant == "ra_defaults" else {}
        self.obj = ConcurrentObject("peterson")
        self.flag = self.obj.array("flag", [False, False], **decl)
        self.victim = self.obj.sync("victim", 0, **decl)
        self._w = REL if variant == "ra_explicit" else None
        self._r = ACQ if variant == "ra_explicit" else None
        for me in (0, 1):
            self.obj.register(EntrySpec("Lock", once=(self._announce,), index=me))
            self.obj.register(EntrySpec(
                "Wait", guard=BooleanGuard(self._may_enter, reads=("flag", "victim")),
                index=me, private=True,
            ))
            self.obj.register(EntrySpec("Unlock", once=(self._leave,), index=me))

    def _announce(self, ctx) -> None:
        me = ctx.index
        self.flag[me].write(True, self._w)
        self.victim.write(me, self._w)
        ctx.call("Wait", index=me)

    def _may_enter(self, view) -> bool:
        me = view.index
        return not view.load("flag", 1 - me, self._r) or view.load("victim", order=self._r) != me

    def _leave(self, ctx) -> None:
        self.flag[ctx.index].write(False, self._w)

    def lock(self, me: int) -> None:
        self.obj.call("Lock", index=me)

    def unlock(self, me: int) -> None:
        self.obj.call("Unlock", index=me)


class FilterLock:
    """Peterson generalized to ``n`` tasks through ``n - 1`` waiting levels."""

    def __init__(self, n: int) -> None:
        if n < 1:
            raise ValueError("need at least one task")
        self.n = n
        self.obj = ConcurrentObject("filter")
        self.level = self.obj.array("level", [0] * n)
        self.victim = self.obj.array("victim", [0] * n)
        for me in range(n):
            self.obj.register(EntrySpec("Lock", once=(self._climb,), index=me))
            self.obj.register(EntrySpec(
                "Wait", guard=BooleanGuard(self._may_climb, reads=("level", "victim")),
                index=me, private=True,
            ))
            self.obj.register(EntrySpec("Unlock", once=(self._leave,), index=me))

    def _climb(self, ctx) -> None:
        me = ctx.index
        for lvl in range(1, self.n):
            self.level[me].write(lvl)
            self.victim[lvl].write(me)
            ctx.call("Wait", index=me)

    def _may_climb(self, view) -> bool:
        me = view.index
        lvl = view.level[me]
        if view.victim[lvl] != me:
            return True
        return all(view.level[k] < lvl for k in range(self.n) if k != me)

    def _leave(self, ctx) -> None:
        self.level[ctx.index].write(0)

    def lock(self, me: int) -> None:
        self.obj.call("Lock", index=me)

    def unlock(self, me: int) -> None:
        self.obj.call("Unlock", index=me)
