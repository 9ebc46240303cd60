"""Reference algorithms built on the cells and concurrent objects."""

from .api import read_modify_write
from .box import ReleaseAcquireBox
from .locks import PETERSON_VARIANTS, FilterLock, PetersonLock
from .stack import EMPTY, ApiStack, LockedStack, NonBlockingStack, SequentialStack

__all__ = [
    "read_modify_write", "ReleaseAcquireBox", "PetersonLock", "FilterLock", "PETERSON_VARIANTS",
    "EMPTY", "NonBlockingStack", "LockedStack", "ApiStack", "SequentialStack",
]
