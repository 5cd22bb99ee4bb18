"""Wait-free range scans over the version-``seq`` tree, and reconstruction of
version trees for inspection."""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import BOTTOM, TRY, Internal, Node, is_sentinel


class RangeScanMixin:
    def range_scan(self, a: int, b: int) -> list[int]:
        """Keys in ``[a, b]`` as of the end of the phase this scan opens."""
        if self.hook is not None:
            self.hook("range_scan", "read-counter", self.counter, None)
        seq = self.counter.value
        if self.hook is not None:
            self.hook("range_scan", "increment", self.counter, None)
        self.counter.increment()
        return self.scan_helper(self.root, seq, a, b)

    def scan_helper(self, node: Node, seq: int, a: int, b: int) -> list[int]:
        # Explicit stack; right pushed before left so leaves come out sorted.
        hook = self.hook
        out = []
        stack = [node]
        while stack:
            node = stack.pop()
            if not isinstance(node, Internal):
                if a <= node.key <= b:
                    out.append(node.key)
                continue
            if hook is not None:
                hook("scan_helper", "read-update", node.update, None)
            info = node.update.value.info
            if hook is not None:
                hook("scan_helper", "read-state", info.state, None)
            state = info.state.value
            if state is BOTTOM or state is TRY:
                self._assist(info, "scan_helper")
            if a > node.key:
                stack.append(self.read_child(node, False, seq))
            elif b < node.key:
                stack.append(self.read_child(node, True, seq))
            else:
                left = self.read_child(node, True, seq)
                stack.append(self.read_child(node, False, seq))
                stack.append(left)
        return out


class VersionTreeError(ValueError):
    pass


@dataclass
class VersionTree:
    """The tree reachable from the root through version-``phase`` children."""

    phase: int
    root: Internal
    children: dict = field(default_factory=dict)  # id(internal) -> (left, right)
    nodes: list = field(default_factory=list)  # preorder

    def child(self, node: Internal, left: bool) -> Node:
        return self.children[id(node)][0 if left else 1]

    def leaves(self) -> list[Node]:
        return [n for n in self.nodes if not isinstance(n, Internal)]

    def keys(self) -> list[int]:
        """Real (non-sentinel) keys in the leaves, in order."""
        return [n.key for n in self.leaves() if not is_sentinel(n.key)]

    def signature(self) -> tuple:
        """Identity-based shape, for before/after comparisons."""
        return tuple(
            (id(n), *(id(c) for c in self.children.get(id(n), ()))) for n in self.nodes
        )

    def check_bst(self) -> list[str]:
        """Return a list of violations of the leaf-oriented BST property."""
        problems = []
        # (node, lo, hi): every key in the subtree must satisfy lo <= key < hi
        stack = [(self.root, None, None)]
        count = 0
        while stack:
            node, lo, hi = stack.pop()
            count += 1
            if (lo is not None and node.key < lo) or (hi is not None and node.key >= hi):
                problems.append(f"{node!r} outside routing interval [{lo}, {hi})")
            if node.seq > self.phase:
                problems.append(f"{node!r} newer than phase {self.phase}")
            if isinstance(node, Internal):
                left, right = self.children[id(node)]
                stack.append((right, node.key, hi))
                stack.append((left, lo, node.key))
        if count != len(self.nodes):
            problems.append("version graph is not a tree")
        keys = [n.key for n in self.leaves()]
        if any(x >= y for x, y in zip(keys, keys[1:])):
            problems.append("leaf keys not strictly increasing")
        return problems


def reconstruct_version_tree(root: Internal, phase: int) -> VersionTree:
    """Resolve every edge at ``phase`` from ``root``.

    Reads child cells without instrumentation, so the result is only
    meaningful when no operation is in flight.
    """
    vt = VersionTree(phase, root)
    seen = set()
    stack = [root]
    while stack:
        node = stack.pop()
        if id(node) in seen:
            raise VersionTreeError(f"cycle through {node!r} at phase {phase}")
        seen.add(id(node))
        vt.nodes.append(node)
        if isinstance(node, Internal):
            pair = []
            for cell in (node.left, node.right):
                child = cell.value
                while child.seq > phase:
                    child = child.prev
                pair.append(child)
            vt.children[id(node)] = tuple(pair)
            stack.append(pair[1])
            stack.append(pair[0])
    return vt
