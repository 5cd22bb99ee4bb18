"""Node and descriptor model shared by every tree routine.

Shared mutable state lives only in :class:`AtomicRef` cells (child pointers,
update words, descriptor states) and in the :class:`PhaseCounter`.  Every
other field is written once, before the object is published.
"""

from __future__ import annotations

import enum
import threading
from typing import Any, NamedTuple, Optional, Union

# 64-bit signed key domain; the two largest values are reserved.
KEY_MIN = -(2**63)
KEY_MAX = 2**63 - 1
INF1 = KEY_MAX - 1
INF2 = KEY_MAX
MAX_REAL_KEY = KEY_MAX - 2

_N_STRIPES = 64
_STRIPES = tuple(threading.Lock() for _ in range(_N_STRIPES))


def is_sentinel(key: int) -> bool:
    return key >= INF1


class AtomicRef:
    """A single shared reference supporting atomic read, write and CAS.

    Reads are plain attribute loads (atomic for object references in
    CPython).  Compare-and-set serializes on a striped lock.  By default the
    comparison is by identity; :class:`UpdateCell` compares by value.
    """

    __slots__ = ("value", "_lock")

    def __init__(self, value: Any) -> None:
        self.value = value
        self._lock = _STRIPES[(id(self) >> 4) % _N_STRIPES]

    def get(self) -> Any:
        return self.value

    def set(self, value: Any) -> None:
        with self._lock:
            self.value = value

    def compare_and_set(self, expected: Any, new: Any) -> bool:
        with self._lock:
            if self.value is expected:
                self.value = new
                return True
            return False

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.value!r})"


class UpdateCell(AtomicRef):
    """Holds an :class:`UpdateWord`; CAS succeeds on (tag, info-identity) equality."""

    __slots__ = ()

    def compare_and_set(self, expected: Any, new: Any) -> bool:
        with self._lock:
            if self.value == expected:
                self.value = new
                return True
            return False


class PhaseCounter:
    """Global monotone counter; each range scan opens a new phase."""

    __slots__ = ("value", "_lock")

    def __init__(self, value: int = 0) -> None:
        self.value = value
        self._lock = threading.Lock()

    def read(self) -> int:
        return self.value

    def increment(self) -> int:
        """Atomically add one; returns the value before the increment."""
        with self._lock:
            old = self.value
            self.value = old + 1
            return old


class UpdateTag(enum.Enum):
    FLAG = "flag"
    MARK = "mark"

    def __repr__(self) -> str:
        return self.name


class InfoState(enum.Enum):
    BOTTOM = "bottom"
    TRY = "try"
    COMMIT = "commit"
    ABORT = "abort"

    def __repr__(self) -> str:
        return self.name


FLAG = UpdateTag.FLAG
MARK = UpdateTag.MARK
BOTTOM = InfoState.BOTTOM
TRY = InfoState.TRY
COMMIT = InfoState.COMMIT
ABORT = InfoState.ABORT

# Transitions a descriptor's state may take.
LEGAL_TRANSITIONS = frozenset({(BOTTOM, TRY), (BOTTOM, ABORT), (TRY, COMMIT), (TRY, ABORT)})


class Info:
    """Descriptor for one update attempt.

    Carries everything a helper needs to finish or abort the attempt.  Only
    ``state`` is mutable.  Equality is identity.
    """

    __slots__ = ("state", "nodes", "old_update", "mark", "par", "old_child", "new_child", "seq")

    def __init__(
        self,
        state: InfoState,
        nodes: tuple = (),
        old_update: tuple = (),
        mark: tuple = (),
        par: Optional[Internal] = None,
        old_child: Optional[Node] = None,
        new_child: Optional[Node] = None,
        seq: Optional[int] = None,
    ) -> None:
        self.state = AtomicRef(state)
        self.nodes = nodes
        self.old_update = old_update
        self.mark = mark
        self.par = par
        self.old_child = old_child
        self.new_child = new_child
        self.seq = seq

    def marks(self, node: Node) -> bool:
        return any(m is node for m in self.mark)

    def __repr__(self) -> str:
        return f"<Info {self.state.value!r} seq={self.seq} at {id(self):#x}>"


class UpdateWord(NamedTuple):
    """(tag, descriptor) pair stored in a node's update cell.

    Tuple equality compares the tag and then the descriptor by identity,
    since :class:`Info` does not override ``__eq__``.
    """

    tag: UpdateTag
    info: Info

    def __repr__(self) -> str:
        return f"({self.tag!r}, {self.info!r})"


class Node:
    __slots__ = ("key", "update", "prev", "seq")

    def __init__(self, key: int, seq: int, prev: Optional[Node], update: UpdateWord) -> None:
        self.key = key
        self.seq = seq
        self.prev = prev
        self.update = UpdateCell(update)


class Leaf(Node):
    __slots__ = ()

    def __repr__(self) -> str:
        return f"<Leaf {_fmt_key(self.key)} seq={self.seq}>"


class Internal(Node):
    __slots__ = ("left", "right")

    def __init__(
        self,
        key: int,
        seq: int,
        prev: Optional[Node],
        update: UpdateWord,
        left: Node,
        right: Node,
    ) -> None:
        super().__init__(key, seq, prev, update)
        self.left = AtomicRef(left)
        self.right = AtomicRef(right)

    def child_cell(self, left: bool) -> AtomicRef:
        return self.left if left else self.right

    def __repr__(self) -> str:
        return f"<Internal {_fmt_key(self.key)} seq={self.seq}>"


AnyNode = Union[Leaf, Internal]


def _fmt_key(key: int) -> str:
    if key == INF1:
        return "inf1"
    if key == INF2:
        return "inf2"
    return str(key)


def frozen(up: UpdateWord) -> bool:
    """True if the node holding ``up`` is locked by an in-progress (or, for
    a mark, committed) update."""
    state = up.info.state.value
    if up.tag is FLAG:
        return state is BOTTOM or state is TRY
    return state is not ABORT


def init_tree() -> tuple[Internal, Info, PhaseCounter]:
    dummy = Info(ABORT)
    idle = UpdateWord(FLAG, dummy)
    root = Internal(
        INF2,
        seq=0,
        prev=None,
        update=idle,
        left=Leaf(INF1, 0, None, idle),
        right=Leaf(INF2, 0, None, idle),
    )
    return root, dummy, PhaseCounter(0)


def iter_nodes(root: Node):
    """Yield every node reachable from ``root`` through child cells and
    ``prev`` pointers, each once.  Only meaningful at a quiescent point."""
    seen = set()
    stack = [root]
    while stack:
        node = stack.pop()
        if node is None or id(node) in seen:
            continue
        seen.add(id(node))
        yield node
        stack.append(node.prev)
        if isinstance(node, Internal):
            stack.append(node.right.value)
            stack.append(node.left.value)
