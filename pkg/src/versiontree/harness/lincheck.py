"""Linearizability checking against a sequential sorted-set model.

Wing & Gong style depth-first search over linearization orders, with the
(linearized-set, model-state) memoization of Lowe.  Pending updates may be
linearized or dropped; pending reads are always dropped.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .history import HistoryEvent, Operation, operations

LINEARIZABLE = "linearizable"
VIOLATION = "violation"
INCONCLUSIVE = "inconclusive"

DEFAULT_MAX_STATES = 200_000


@dataclass
class Verdict:
    status: str
    witness: Optional[list[int]] = None  # operation ids in linearization order
    violating_prefix: Optional[list[HistoryEvent]] = None
    states: int = 0
    operations: list[Operation] = field(default_factory=list, repr=False)

    @property
    def ok(self) -> bool:
        return self.status == LINEARIZABLE


def apply(state: frozenset, op: str, args: tuple):
    """Run one operation on the sequential model; returns (result, new state)."""
    if op == "contains":
        return args[0] in state, state
    if op == "add":
        k = args[0]
        if k in state:
            return False, state
        return True, state | {k}
    if op == "remove":
        k = args[0]
        if k not in state:
            return False, state
        return True, state - {k}
    if op == "range":
        a, b = args
        return tuple(sorted(x for x in state if a <= x <= b)), state
    raise ValueError(f"unknown operation {op!r}")


def _search(ops: Sequence[Operation], initial: frozenset, max_states: int):
    """Return (witness or None, explored, exhausted_budget)."""
    # Pending reads have no observable effect and are dropped up front.
    live = [o for o in ops if not (o.pending and o.op in ("contains", "range"))]
    required = 0
    for o in live:
        if not o.pending:
            required |= 1 << o.id
    seen = set()
    # Frames: (linearized mask, model state, order so far)
    stack = [(0, initial, [])]
    explored = 0
    while stack:
        mask, state, order = stack.pop()
        if mask & required == required:
            return order, explored, False
        key = (mask, state)
        if key in seen:
            continue
        seen.add(key)
        explored += 1
        if explored > max_states:
            return None, explored, True
        horizon = min((o.respond for o in live if not (mask >> o.id) & 1 and not o.pending), default=None)
        children = []
        for o in live:
            if (mask >> o.id) & 1:
                continue
            if horizon is not None and o.invoke > horizon:
                break
            result, nxt = apply(state, o.op, o.args)
            if not o.pending and result != o.result:
                continue
            children.append((mask | 1 << o.id, nxt, order + [o.id]))
        # Explore in invocation order.
        stack.extend(reversed(children))
    return None, explored, False


def check_operations(ops: Sequence[Operation], *, initial: Iterable[int] = (), max_states: int = DEFAULT_MAX_STATES) -> Verdict:
    witness, explored, exhausted = _search(ops, frozenset(initial), max_states)
    if witness is not None:
        return Verdict(LINEARIZABLE, witness=witness, states=explored, operations=list(ops))
    if exhausted:
        return Verdict(INCONCLUSIVE, states=explored, operations=list(ops))
    return Verdict(VIOLATION, states=explored, operations=list(ops))


def check_linearizable(
    history: Sequence[HistoryEvent],
    *,
    initial: Iterable[int] = (),
    max_states: int = DEFAULT_MAX_STATES,
) -> Verdict:
    """Decide whether ``history`` is linearizable w.r.t. a sorted set.

    ``initial`` is the set content before the first event.  On a violation
    the shortest non-linearizable prefix of events is attached.  A search
    exceeding ``max_states`` yields an inconclusive verdict.
    """
    initial = frozenset(initial)
    history = list(history)
    verdict = check_operations(operations(history), initial=initial, max_states=max_states)
    if verdict.status != VIOLATION:
        return verdict
    # Linearizability is prefix-closed: bisect for the shortest failing prefix.
    lo, hi = 0, len(history)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        sub = check_operations(operations(history[:mid]), initial=initial, max_states=max_states)
        if sub.status == VIOLATION:
            hi = mid
        else:
            lo = mid
    verdict.violating_prefix = history[:hi]
    return verdict
