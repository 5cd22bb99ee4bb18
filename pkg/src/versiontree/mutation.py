"""Write-side routines: insert, delete and the descriptor protocol behind them."""

from __future__ import annotations

from typing import NamedTuple

from .core import (
    ABORT,
    BOTTOM,
    COMMIT,
    FLAG,
    MARK,
    TRY,
    Info,
    Internal,
    Leaf,
    Node,
    UpdateWord,
)


class ExecutePlan(NamedTuple):
    nodes: tuple
    old_update: tuple
    mark: tuple
    par: Internal
    old_child: Node
    new_child: Node
    seq: int


class MutationMixin:
    def cas_child(self, parent: Internal, old: Node, new: Node, info: Info = None) -> None:
        """Swing whichever child of ``parent`` routes ``new.key`` from ``old``
        to ``new``.  A failed CAS is silent.  ``info`` is reported to the hook
        only."""
        cell = parent.left if new.key < parent.key else parent.right
        if self.hook is not None:
            self.hook("cas_child", "child-cas", cell, (old, new, info))
        cell.compare_and_set(old, new)

    def _assist(self, info: Info, site: str) -> bool:
        # Helping a descriptor created by another operation.
        if self.hook is not None:
            self.hook("assist", site, None, info)
        return self.help(info)

    def execute(self, plan: ExecutePlan) -> bool:
        hook = self.hook
        for up in plan.old_update:
            if self._frozen(up, "execute"):
                if hook is not None:
                    hook("execute", "recheck-state", up.info.state, None)
                state = up.info.state.value
                if state is BOTTOM or state is TRY:
                    self._assist(up.info, "execute")
                return False
        info = Info(BOTTOM, *plan)
        first = plan.nodes[0].update
        word = UpdateWord(FLAG, info)
        if hook is not None:
            hook("execute", "freeze-cas", first, (plan.old_update[0], word))
        if first.compare_and_set(plan.old_update[0], word):
            return self.help(info)
        return False

    def help(self, info: Info) -> bool:
        """Drive ``info`` to a terminal state; True iff it committed.

        Safe to run concurrently from any number of helpers.
        """
        hook = self.hook
        state = info.state
        if hook is not None:
            hook("help", "read-counter", self.counter, None)
        if self.counter.value != info.seq:
            if hook is not None:
                hook("help", "abort-cas", state, (BOTTOM, ABORT))
            state.compare_and_set(BOTTOM, ABORT)
        else:
            if hook is not None:
                hook("help", "try-cas", state, (BOTTOM, TRY))
            state.compare_and_set(BOTTOM, TRY)
        if hook is not None:
            hook("help", "read-state", state, None)
        proceed = state.value is TRY
        nodes = info.nodes
        i = 1
        while proceed and i < len(nodes):
            node = nodes[i]
            word = UpdateWord(MARK if info.marks(node) else FLAG, info)
            if hook is not None:
                hook("help", "freeze-cas", node.update, (info.old_update[i], word))
            node.update.compare_and_set(info.old_update[i], word)
            if hook is not None:
                hook("help", "check-frozen", node.update, None)
            proceed = node.update.value.info is info
            i += 1
        if proceed:
            self.cas_child(info.par, info.old_child, info.new_child, info)
            if hook is not None:
                hook("help", "commit-write", state, COMMIT)
            state.set(COMMIT)
        else:
            if hook is not None:
                hook("help", "recheck-state", state, None)
            if state.value is TRY:
                if hook is not None:
                    hook("help", "abort-write", state, ABORT)
                state.set(ABORT)
        if hook is not None:
            hook("help", "read-outcome", state, None)
        return state.value is COMMIT

    def insert(self, k: int) -> bool:
        idle = self.idle
        while True:
            seq = self._read_counter("insert")
            gp, p, l = self.search(k, seq)
            validated, _, pupdate = self.validate_leaf(gp, p, l, k)
            if not validated:
                continue
            if l.key == k:
                return False
            new = Leaf(k, seq, None, idle)
            sibling = Leaf(l.key, seq, None, idle)
            if k < l.key:
                internal = Internal(l.key, seq, l, idle, new, sibling)
            else:
                internal = Internal(k, seq, l, idle, sibling, new)
            if self.hook is not None:
                self.hook("insert", "read-leaf-update", l.update, None)
            lupdate = l.update.value
            plan = ExecutePlan((p, l), (pupdate, lupdate), (l,), p, l, internal, seq)
            if self.execute(plan):
                return True

    def delete(self, k: int) -> bool:
        idle = self.idle
        while True:
            seq = self._read_counter("delete")
            gp, p, l = self.search(k, seq)
            validated, gpupdate, pupdate = self.validate_leaf(gp, p, l, k)
            if not validated:
                continue
            if l.key != k:
                return False
            sibling_left = l.key >= p.key
            sibling = self.read_child(p, sibling_left, seq)
            validated, _ = self.validate_link(p, sibling, sibling_left)
            if not validated:
                continue
            hook = self.hook
            if isinstance(sibling, Internal):
                if hook is not None:
                    hook("delete", "copy-left", sibling.left, None)
                nephew_l = sibling.left.value
                if hook is not None:
                    hook("delete", "copy-right", sibling.right, None)
                nephew_r = sibling.right.value
                new_node = Internal(sibling.key, seq, p, idle, nephew_l, nephew_r)
                validated, supdate = self.validate_link(sibling, nephew_l, True)
                if validated:
                    validated, _ = self.validate_link(sibling, nephew_r, False)
            else:
                new_node = Leaf(sibling.key, seq, p, idle)
                if hook is not None:
                    hook("delete", "read-sibling-update", sibling.update, None)
                supdate = sibling.update.value
            if not validated:
                continue
            if hook is not None:
                hook("delete", "read-leaf-update", l.update, None)
            lupdate = l.update.value
            plan = ExecutePlan(
                (gp, p, l, sibling),
                (gpupdate, pupdate, lupdate, supdate),
                (p, l, sibling),
                gp,
                p,
                new_node,
                seq,
            )
            if self.execute(plan):
                return True
