"""Persistent non-blocking binary search tree with wait-free range scans."""

from .core import INF1, INF2, KEY_MIN, MAX_REAL_KEY, frozen, init_tree
from .orderedset import InvalidKeyError, OrderedSet, check_key, new_set
from .rangescan import VersionTree, VersionTreeError, reconstruct_version_tree
from .tree import PNBTree

__version__ = "0.1.0"

__all__ = [
    "INF1",
    "INF2",
    "KEY_MIN",
    "MAX_REAL_KEY",
    "InvalidKeyError",
    "OrderedSet",
    "PNBTree",
    "VersionTree",
    "VersionTreeError",
    "check_key",
    "frozen",
    "init_tree",
    "new_set",
    "reconstruct_version_tree",
]
