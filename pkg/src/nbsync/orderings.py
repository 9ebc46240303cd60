"""Memory-order vocabulary, strictness lattice and reordering constraints.

The vocabulary has no consume order and no combined acquire-release order.
``NOT_ATOMIC`` marks ordinary (non-synchronized) accesses and is only
meaningful to the simulator; cells reject it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass


class MemoryOrder(enum.Enum):
    SEQ_CST = "seq_cst"
    ACQUIRE = "acquire"
    RELEASE = "release"
    RELAXED = "relaxed"
    NOT_ATOMIC = "not_atomic"

    def __str__(self) -> str:
        return self.value


class AccessKind(enum.Enum):
    LOAD = "load"
    STORE = "store"
    RMW = "rmw"

    @property
    def reads(self) -> bool:
        return self is not AccessKind.STORE

    @property
    def writes(self) -> bool:
        return self is not AccessKind.LOAD


class ConstraintMode(enum.Enum):
    TABLE1 = "table1"
    FULL = "full"


class OrderError(ValueError):
    """Base class for illegal memory-order annotations."""


class InvalidReadOrder(OrderError):
    pass


class InvalidWriteOrder(OrderError):
    pass


class InvalidOrderPair(OrderError):
    def __init__(self, success: MemoryOrder, failure: MemoryOrder) -> None:
        super().__init__(f"invalid (success, failure) order pair: ({success}, {failure})")
        self.success = success
        self.failure = failure


SC = MemoryOrder.SEQ_CST
ACQ = MemoryOrder.ACQUIRE
REL = MemoryOrder.RELEASE
RLX = MemoryOrder.RELAXED
NA = MemoryOrder.NOT_ATOMIC

ATOMIC_ORDERS = (SC, ACQ, REL, RLX)
READ_ORDERS = frozenset({SC, ACQ, RLX})
WRITE_ORDERS = frozenset({SC, REL, RLX})
SUCCESS_ORDERS = frozenset(ATOMIC_ORDERS)
FAILURE_ORDERS = READ_ORDERS

# (a, b) pairs with a strictly below b; the order is the reflexive closure.
_BELOW = frozenset({(RLX, ACQ), (RLX, REL), (RLX, SC), (ACQ, SC), (REL, SC)})

_ALIASES = {
    "seq_cst": SC, "sc": SC, "sequentially_consistent": SC,
    "acquire": ACQ, "acq": ACQ,
    "release": REL, "rel": REL,
    "relaxed": RLX, "rlx": RLX,
    "not_atomic": NA, "plain": NA, "na": NA,
}


def parse_order(text: str) -> MemoryOrder:
    """Look up an order by name (case-insensitive, short aliases accepted)."""
    try:
        return _ALIASES[text.strip().lower()]
    except KeyError:
        raise ValueError(f"unknown memory order {text!r}") from None


def strictness_leq(a: MemoryOrder, b: MemoryOrder) -> bool:
    """True iff ``a`` is no stricter than ``b``.

    Relaxed is the bottom, SeqCst the top, Acquire and Release are
    incomparable.
    """
    if a is NA or b is NA:
        raise ValueError("NotAtomic is not part of the strictness lattice")
    return a is b or (a, b) in _BELOW


def validate_read_order(order: MemoryOrder) -> MemoryOrder:
    if order not in READ_ORDERS:
        raise InvalidReadOrder(f"{order} is not a valid order for a read access")
    return order


def validate_write_order(order: MemoryOrder) -> MemoryOrder:
    if order not in WRITE_ORDERS:
        raise InvalidWriteOrder(f"{order} is not a valid order for a write access")
    return order


def validate_rmw_pair(success: MemoryOrder, failure: MemoryOrder) -> tuple[MemoryOrder, MemoryOrder]:
    """Check a (success, failure) pair for an exchange.

    The failure outcome is a read, and it must not be stricter than the
    success order.
    """
    if (
        success not in SUCCESS_ORDERS
        or failure not in FAILURE_ORDERS
        or not strictness_leq(failure, success)
    ):
        raise InvalidOrderPair(success, failure)
    return success, failure


@dataclass(frozen=True)
class OrderDefaults:
    """Declaration-time default orders of a synchronized cell.

    ``write_success`` doubles as the default for plain writes.
    """

    read: MemoryOrder = SC
    write_success: MemoryOrder = SC
    write_failure: MemoryOrder = SC

    def __post_init__(self) -> None:
        validate_read_order(self.read)
        validate_rmw_pair(self.write_success, self.write_failure)

    @classmethod
    def sync(cls, read: MemoryOrder = SC, write: MemoryOrder = SC) -> "OrderDefaults":
        """Defaults for a cell that is only read and written, never exchanged."""
        validate_write_order(write)
        return cls(read, write, SC if write is SC else RLX)

    @property
    def write(self) -> MemoryOrder:
        return self.write_success


def rmw_read_order(success: MemoryOrder, failure: MemoryOrder, succeeded: bool) -> MemoryOrder:
    """Effective order of the read half of an exchange."""
    if not succeeded:
        return failure
    return success if success in (ACQ, SC) else RLX


def rmw_write_order(success: MemoryOrder) -> MemoryOrder:
    """Effective order of the write half of a successful exchange."""
    return success if success in (REL, SC) else RLX


def is_release_class(order: MemoryOrder) -> bool:
    return order is REL or order is SC


def is_acquire_class(order: MemoryOrder) -> bool:
    return order is ACQ or order is SC


Access = tuple[AccessKind, MemoryOrder]


def reorder_allowed(first: Access, second: Access, mode: ConstraintMode = ConstraintMode.TABLE1) -> bool:
    """May ``second`` be performed before ``first`` (which precedes it in program order)?

    TABLE1 applies exactly the listed constraints: stores stay before a
    release, loads stay after an acquire, nothing crosses a SeqCst access.
    FULL additionally treats release and acquire as one-way barriers for
    every access kind.
    """
    k1, o1 = first
    k2, o2 = second
    if o1 is SC or o2 is SC:
        return False
    if k2.writes and is_release_class(o2) and k1.writes:
        return False
    if k1.reads and is_acquire_class(o1) and k2.reads:
        return False
    if mode is ConstraintMode.FULL:
        if k2.writes and is_release_class(o2):
            return False
        if k1.reads and is_acquire_class(o1):
            return False
    return True
