import itertools
import random

from hypothesis import given
from hypothesis import strategies as st

from versiontree.harness.history import HistoryEvent, Recorder, operations
from versiontree.harness.lincheck import INCONCLUSIVE, LINEARIZABLE, VIOLATION, apply, check_linearizable


def _h(*rows):
    return [HistoryEvent(k, t, op, tuple(a), i, r) for i, (k, t, op, a, r) in enumerate(rows)]


def test_sequential_add_then_contains():
    h = _h(("invoke", 1, "add", [1], None), ("respond", 1, "add", [1], True),
           ("invoke", 2, "contains", [1], None), ("respond", 2, "contains", [1], True))
    v = check_linearizable(h)
    assert v.status == LINEARIZABLE and v.witness == [0, 1]


def test_response_before_any_add_is_a_violation():
    h = _h(("invoke", 2, "contains", [1], None), ("respond", 2, "contains", [1], True),
           ("invoke", 1, "add", [1], None), ("respond", 1, "add", [1], True))
    v = check_linearizable(h)
    assert v.status == VIOLATION
    assert v.violating_prefix == h[:2]


def test_overlapping_operations_may_reorder():
    h = _h(("invoke", 2, "contains", [1], None), ("invoke", 1, "add", [1], None),
           ("respond", 2, "contains", [1], True), ("respond", 1, "add", [1], True))
    assert check_linearizable(h).ok


def test_pending_update_may_take_effect():
    h = _h(("invoke", 1, "add", [1], None),
           ("invoke", 2, "contains", [1], None), ("respond", 2, "contains", [1], True))
    assert check_linearizable(h).ok


def test_pending_update_may_be_dropped():
    h = _h(("invoke", 1, "add", [1], None),
           ("invoke", 2, "contains", [1], None), ("respond", 2, "contains", [1], False))
    assert check_linearizable(h).ok


def test_initial_contents():
    h = _h(("invoke", 1, "range", [0, 9], None), ("respond", 1, "range", [0, 9], (2, 4)))
    assert not check_linearizable(h).ok
    assert check_linearizable(h, initial=[2, 4, 11]).ok


def test_budget_gives_inconclusive():
    rec = Recorder()
    for t in range(4):
        rec.invoke(t, "add", (t,))
    for t in range(4):
        rec.respond(t, "add", (t,), True)
    rec.invoke(9, "contains", (7,))
    rec.respond(9, "contains", (7,), True)
    assert check_linearizable(rec.events, max_states=3).status == INCONCLUSIVE
    assert check_linearizable(rec.events).status == VIOLATION


def _brute_force(events, initial=frozenset()):
    ops = operations(events)
    done = [o for o in ops if not o.pending]
    optional = [o for o in ops if o.pending and o.op in ("add", "remove")]
    for r in range(len(optional) + 1):
        for extra in itertools.combinations(optional, r):
            chosen = done + list(extra)
            for perm in itertools.permutations(chosen):
                pos = {o.id: i for i, o in enumerate(perm)}
                if any(a.respond is not None and a.respond < b.invoke and pos[a.id] > pos[b.id]
                       for a in chosen for b in chosen):
                    continue
                state, ok = initial, True
                for o in perm:
                    res, state = apply(state, o.op, o.args)
                    if not o.pending and res != o.result:
                        ok = False
                        break
                if ok:
                    return True
    return False


@st.composite
def small_histories(draw):
    """Random histories, half of them produced by a real linearization."""
    honest = draw(st.booleans())
    rng = random.Random(draw(st.integers(0, 2**32)))
    state = frozenset(k for k in range(3) if rng.random() < 0.3)
    initial = state
    rec = Recorder()
    open_ops = {}
    budget = rng.randint(1, 6)
    for _ in range(40):
        t = rng.randrange(3)
        if t in open_ops:
            op, args, result = open_ops[t]
            if result is None and honest:
                result, state = apply(state, op, args)
                open_ops[t] = (op, args, result)
                continue
            if result is None:
                result = apply(frozenset(k for k in range(3) if rng.random() < 0.5), op, args)[0]
            del open_ops[t]
            rec.respond(t, op, args, list(result) if op == "range" else result)
        elif budget:
            budget -= 1
            op = rng.choice(["contains", "add", "remove", "range"])
            args = (rng.randrange(3), rng.randrange(3)) if op == "range" else (rng.randrange(3),)
            rec.invoke(t, op, args)
            open_ops[t] = (op, args, None)
    return rec.events, initial


@given(small_histories())
def test_agrees_with_brute_force(case):
    events, initial = case
    v = check_linearizable(events, initial=initial)
    assert v.status != INCONCLUSIVE
    assert v.ok == _brute_force(events, initial)
    if not v.ok:
        prefix = v.violating_prefix
        assert not _brute_force(prefix, initial)
        assert _brute_force(prefix[:-1], initial)
