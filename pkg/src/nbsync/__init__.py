"""Non-blocking synchronization toolkit: ordered atomic cells, concurrent
objects with retrying entries, and an exhaustive memory-model simulator."""

from .cells import Failed, RmwCell, Snapshot, Succeeded, SyncArray, SyncCell, TaggedRef, UnsupportedValue
from .orderings import (
    AccessKind,
    ConstraintMode,
    InvalidOrderPair,
    InvalidReadOrder,
    InvalidWriteOrder,
    MemoryOrder,
    OrderDefaults,
)

__version__ = "0.1.0"
