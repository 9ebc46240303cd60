"""Low-level read-modify-write API for code that does not use concurrent objects."""

from __future__ import annotations

from typing import Callable, Optional, TypeVar

from ..cells import RmwCell
from ..conobj.tasks import LoopKind, SyncLoop
from ..orderings import MemoryOrder, validate_rmw_pair

V = TypeVar("V")


def read_modify_write(cell: RmwCell, update: Callable[[V], V],
                      success: MemoryOrder = MemoryOrder.SEQ_CST,
                      failure: MemoryOrder = MemoryOrder.SEQ_CST,
                      attempts: Optional[list] = None) -> V:
    """Apply ``update`` to ``cell`` atomically and return the value written.

    ``update`` may run several times; it must not have side effects that
    matter when an attempt is discarded. The retry loop reports itself to
    the scheduler like any other sync loop. If ``attempts`` is given, the
    number of tries is appended to it.
    """
    validate_rmw_pair(success, failure)
    snap = cell.snapshot(failure)
    with SyncLoop(LoopKind.RMW) as loop:
        while True:
            new = update(snap.observed)
            outcome = cell.exchange(snap, new, success, failure)
            if outcome:
                if attempts is not None:
                    attempts.append(loop.iteration)
                return new
            snap = outcome.fresh
            loop.retry()
