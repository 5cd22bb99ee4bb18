"""Read-side routines: version-aware child resolution, search, validation, find."""

from __future__ import annotations

from typing import NamedTuple, Optional

from .core import Internal, Leaf, Node, UpdateWord, frozen


class SearchResult(NamedTuple):
    gp: Optional[Internal]
    p: Internal
    l: Leaf


class LinkValidation(NamedTuple):
    validated: bool
    witness: Optional[UpdateWord]


class LeafValidation(NamedTuple):
    validated: bool
    gpupdate: Optional[UpdateWord]
    pupdate: Optional[UpdateWord]


_LINK_FAILED = LinkValidation(False, None)


class TraversalMixin:
    """Search/validate/find over a tree with ``root``, ``counter`` and ``hook``."""

    def _frozen(self, up: UpdateWord, routine: str) -> bool:
        if self.hook is not None:
            self.hook(routine, "read-state", up.info.state, None)
        return frozen(up)

    def read_child(self, p: Internal, left: bool, seq: int) -> Node:
        """Return the version-``seq`` left or right child of ``p``.

        The child cell is read once; ``prev`` is then followed until a node
        created in phase ``seq`` or earlier is reached.
        """
        cell = p.left if left else p.right
        if self.hook is not None:
            self.hook("read_child", "read-child", cell, None)
        node = cell.value
        while node.seq > seq:
            node = node.prev
        return node

    def search(self, k: int, seq: int) -> SearchResult:
        gp = p = None
        node = self.root
        while isinstance(node, Internal):
            gp = p
            p = node
            node = self.read_child(p, k < p.key, seq)
        return SearchResult(gp, p, node)

    def validate_link(self, parent: Internal, child: Node, left: bool) -> LinkValidation:
        """Check that ``parent`` is not frozen and still points at ``child``.

        A frozen parent is helped once and the link reported invalid.
        """
        hook = self.hook
        if hook is not None:
            hook("validate_link", "read-update", parent.update, None)
        up = parent.update.value
        if self._frozen(up, "validate_link"):
            self._assist(up.info, "validate_link")
            return _LINK_FAILED
        cell = parent.left if left else parent.right
        if hook is not None:
            hook("validate_link", "read-child", cell, None)
        if cell.value is not child:
            return _LINK_FAILED
        return LinkValidation(True, up)

    def validate_leaf(self, gp: Optional[Internal], p: Internal, l: Leaf, k: int) -> LeafValidation:
        gpupdate = None
        validated, pupdate = self.validate_link(p, l, k < p.key)
        at_root = p is self.root
        if validated and not at_root:
            validated, gpupdate = self.validate_link(gp, p, k < gp.key)
        if validated:
            hook = self.hook
            if hook is not None:
                hook("validate_leaf", "reread-p", p.update, None)
            validated = p.update.value == pupdate
            if validated and hook is not None:
                # Same configuration as just before the re-read of p.
                hook("validate_leaf", "p-reread", None, (gp, p, l))
            if validated and not at_root:
                if hook is not None:
                    hook("validate_leaf", "reread-gp", gp.update, None)
                validated = gp.update.value == gpupdate
            if validated and hook is not None:
                hook("validate_leaf", "validated", None, None)
        return LeafValidation(validated, gpupdate, pupdate)

    def _read_counter(self, routine: str) -> int:
        if self.hook is not None:
            self.hook(routine, "read-counter", self.counter, None)
        return self.counter.value

    def find(self, k: int) -> Optional[Leaf]:
        while True:
            seq = self._read_counter("find")
            gp, p, l = self.search(k, seq)
            if self.validate_leaf(gp, p, l, k).validated:
                return l if l.key == k else None
