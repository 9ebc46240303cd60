"""Concurrent-object engine, task states and scheduling."""

from .engine import (
    TRUE_GUARD,
    Attempt,
    BooleanGuard,
    ConcurrentObject,
    DuplicateEntry,
    EntryError,
    EntrySpec,
    ForeignCell,
    PrivateEntry,
    RmwGuard,
    Stage,
    StageViolation,
    UnknownEntry,
    call_entry,
    register_entry,
)
from .reclaim import Allocator, DoubleFree, ReclaimCounter, UseAfterFree, with_reclamation
from .scheduler import Scheduler, SimTask, pick, simulate_rounds
from .tasks import (
    THRESHOLDS,
    LoopKind,
    SyncLoop,
    Task,
    TaskState,
    bind_task,
    configure_backoff,
    current_task,
    get_task_state,
    set_task_state,
)

__all__ = [name for name in dir() if not name.startswith("_")]
