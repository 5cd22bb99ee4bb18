"""The persistent non-blocking BST assembled from its read, write and scan
routines."""

from __future__ import annotations

from typing import Any, Callable, Optional

from .core import FLAG, Internal, UpdateWord, init_tree
from .mutation import MutationMixin
from .rangescan import RangeScanMixin, VersionTree, reconstruct_version_tree
from .traversal import TraversalMixin

# hook(routine, label, cell, arg) runs on the acting thread immediately before
# the shared access it names.  ``cell`` is None for pure notifications.
Hook = Callable[[str, str, Any, Any], None]

# Labels whose access may modify the named cell.
WRITE_LABELS = frozenset(
    {"freeze-cas", "abort-cas", "try-cas", "child-cas", "commit-write", "abort-write", "increment"}
)


class PNBTree(TraversalMixin, MutationMixin, RangeScanMixin):
    """Leaf-oriented BST with lock-free updates and wait-free range scans.

    Keys are assumed to be real (non-sentinel); :class:`~versiontree.OrderedSet`
    enforces this.
    """

    def __init__(self, hook: Optional[Hook] = None) -> None:
        self.root, self.dummy, self.counter = init_tree()
        self.idle = UpdateWord(FLAG, self.dummy)
        self.hook = hook

    def version_tree(self, phase: int) -> VersionTree:
        return reconstruct_version_tree(self.root, phase)
