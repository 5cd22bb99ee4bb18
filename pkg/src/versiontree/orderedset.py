"""Public ordered-set facade over :class:`PNBTree`."""

from __future__ import annotations

from typing import Optional

from .core import KEY_MIN, MAX_REAL_KEY, PhaseCounter
from .rangescan import VersionTree, VersionTreeError
from .tree import Hook, PNBTree


class InvalidKeyError(ValueError):
    """Key is not an int in the real key domain (sentinels are reserved)."""


def check_key(k) -> int:
    if type(k) is not int:
        raise InvalidKeyError(f"keys must be int, got {type(k).__name__}")
    if not KEY_MIN <= k <= MAX_REAL_KEY:
        raise InvalidKeyError(f"key {k} outside [{KEY_MIN}, {MAX_REAL_KEY}]")
    return k


class OrderedSet:
    """Concurrent set of 64-bit integer keys.

    Any number of threads may share one instance.  ``add``/``remove`` are
    lock-free, ``range`` is wait-free.

    >>> s = OrderedSet()
    >>> s.add(3), s.add(3), 3 in s
    (True, False, True)
    >>> s.range(0, 10)
    [3]
    """

    def __init__(self, hook: Optional[Hook] = None) -> None:
        self.tree = PNBTree(hook)
        self._started = PhaseCounter()
        self._finished = PhaseCounter()

    @property
    def hook(self) -> Optional[Hook]:
        return self.tree.hook

    @hook.setter
    def hook(self, hook: Optional[Hook]) -> None:
        self.tree.hook = hook

    def contains(self, k: int) -> bool:
        check_key(k)
        self._started.increment()
        try:
            return self.tree.find(k) is not None
        finally:
            self._finished.increment()

    __contains__ = contains

    def add(self, k: int) -> bool:
        check_key(k)
        self._started.increment()
        try:
            return self.tree.insert(k)
        finally:
            self._finished.increment()

    def remove(self, k: int) -> bool:
        check_key(k)
        self._started.increment()
        try:
            return self.tree.delete(k)
        finally:
            self._finished.increment()

    def range(self, a: int, b: int) -> list[int]:
        """Sorted keys in the closed interval ``[a, b]``."""
        check_key(a)
        check_key(b)
        self._started.increment()
        try:
            return self.tree.range_scan(a, b)
        finally:
            self._finished.increment()

    @property
    def phase(self) -> int:
        return self.tree.counter.value

    def in_flight(self) -> int:
        return self._started.value - self._finished.value

    def version_tree(self, phase: Optional[int] = None) -> VersionTree:
        """Reconstruct the tree as seen by phase ``phase`` (default: current).

        Must be called while no operation is in flight.
        """
        if self.in_flight():
            raise VersionTreeError("version trees can only be reconstructed at quiescence")
        if phase is None:
            phase = self.phase
        if not 0 <= phase <= self.phase:
            raise VersionTreeError(f"phase {phase} not in [0, {self.phase}]")
        return self.tree.version_tree(phase)


def new_set(hook: Optional[Hook] = None) -> OrderedSet:
    return OrderedSet(hook)
