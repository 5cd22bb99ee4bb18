import threading

import pytest
from hypothesis import given
from hypothesis import strategies as st

from versiontree.core import (
    ABORT,
    BOTTOM,
    COMMIT,
    FLAG,
    INF1,
    INF2,
    KEY_MAX,
    LEGAL_TRANSITIONS,
    MARK,
    TRY,
    AtomicRef,
    Info,
    Internal,
    Leaf,
    PhaseCounter,
    UpdateCell,
    UpdateWord,
    frozen,
    init_tree,
    is_sentinel,
    iter_nodes,
)

from conftest import build_set


def test_sentinels_order_above_real_keys():
    assert INF1 == KEY_MAX - 1 and INF2 == KEY_MAX
    assert INF1 < INF2
    assert is_sentinel(INF1) and is_sentinel(INF2)
    assert not is_sentinel(INF1 - 1)


def test_init_tree_shape():
    root, dummy, counter = init_tree()
    assert root.key == INF2
    assert root.left.value.key == INF1
    assert root.right.value.key == INF2
    assert dummy.state.value is ABORT
    assert counter.value == 0
    assert not frozen(root.update.value)
    assert root.update.value == UpdateWord(FLAG, dummy)
    for leaf in (root.left.value, root.right.value):
        assert leaf.update.value.info is dummy


@pytest.mark.parametrize(
    "tag, state, expected",
    [
        (FLAG, BOTTOM, True),
        (FLAG, TRY, True),
        (FLAG, COMMIT, False),
        (FLAG, ABORT, False),
        (MARK, BOTTOM, True),
        (MARK, TRY, True),
        (MARK, COMMIT, True),
        (MARK, ABORT, False),
    ],
)
def test_frozen(tag, state, expected):
    assert frozen(UpdateWord(tag, Info(state))) is expected


def test_update_word_equality_is_identity_on_info():
    a, b = Info(BOTTOM), Info(BOTTOM)
    assert UpdateWord(FLAG, a) == UpdateWord(FLAG, a)
    assert UpdateWord(FLAG, a) != UpdateWord(FLAG, b)
    assert UpdateWord(FLAG, a) != UpdateWord(MARK, a)


def test_update_cell_cas_compares_words_by_value():
    info = Info(BOTTOM)
    cell = UpdateCell(UpdateWord(FLAG, info))
    assert cell.compare_and_set(UpdateWord(FLAG, info), UpdateWord(MARK, info))
    assert not cell.compare_and_set(UpdateWord(FLAG, info), UpdateWord(FLAG, info))
    assert cell.value.tag is MARK


def test_atomic_ref_cas_is_identity():
    x, y = [1], [1]
    ref = AtomicRef(x)
    assert not ref.compare_and_set(y, "new")
    assert ref.compare_and_set(x, "new")
    assert ref.get() == "new"


def test_legal_transitions():
    assert LEGAL_TRANSITIONS == {(BOTTOM, TRY), (BOTTOM, ABORT), (TRY, COMMIT), (TRY, ABORT)}


def test_phase_counter_increment_is_atomic():
    c = PhaseCounter()
    seen = []

    def work():
        seen.extend(c.increment() for _ in range(2000))

    threads = [threading.Thread(target=work) for _ in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert c.read() == 8000
    assert sorted(seen) == list(range(8000))


keys = st.lists(st.integers(-50, 50), max_size=40)


def _infos_of(s):
    out = []
    for n in iter_nodes(s.tree.root):
        info = n.update.value.info
        if info is not s.tree.dummy and info not in out:
            out.append(info)
    return out


@given(keys, st.integers(0, 5))
def test_info_invariants(ks, scans):
    s = build_set(ks, scans)
    root = s.tree.root
    for info in _infos_of(s):
        assert all(any(m is n for n in info.nodes) for m in info.mark)
        assert any(info.par is n for n in info.nodes)
        assert info.marks(info.old_child)
        assert info.old_child is not info.new_child
        assert info.new_child.prev is info.old_child
        assert all(n.seq <= info.seq for n in info.nodes)
        if info.par is root:
            assert is_sentinel(info.new_child.key)


@given(keys, st.integers(0, 5))
def test_node_invariants(ks, scans):
    s = build_set(ks, scans)
    phase = s.phase
    for v in iter_nodes(s.tree.root):
        # prev chains are finite and acyclic
        seen = set()
        n = v
        while n is not None:
            assert id(n) not in seen
            seen.add(id(n))
            n = n.prev
        if not isinstance(v, Internal):
            continue
        for left in (True, False):
            child = v.child_cell(left).value
            assert child is not None
            for s_ in range(v.seq, phase + 2):
                n = child
                while n is not None and n.seq > s_:
                    n = n.prev
                assert n is not None and n.seq <= s_
            n = child
            while n is not None:
                assert (n.key < v.key) if left else (n.key >= v.key)
                n = n.prev


def _fingerprint(root):
    return {id(n): (n.key, n.seq, id(n.prev)) for n in iter_nodes(root)}


@given(keys, keys)
def test_published_fields_never_change(first, second):
    s = build_set(first, 2)
    before = _fingerprint(s.tree.root)
    for k in second:
        s.add(k)
        s.remove(k // 2)
    s.range(-100, 100)
    after = _fingerprint(s.tree.root)
    for nid, fp in before.items():
        if nid in after:
            assert after[nid] == fp


def test_leaf_and_internal_repr():
    root, _, _ = init_tree()
    assert "inf1" in repr(root.left.value)
    assert "inf2" in repr(root)
    assert isinstance(root.left.value, Leaf)
