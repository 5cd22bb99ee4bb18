import io

import pytest
from hypothesis import given
from hypothesis import strategies as st

from versiontree.harness.history import (
    HistoryError,
    HistoryEvent,
    Recorder,
    dump_history,
    load_history,
    operations,
    read_history,
    write_history,
)

key = st.integers(-(2**63), 2**63 - 3)


@st.composite
def histories(draw):
    rec = Recorder()
    open_ops = {}
    for _ in range(draw(st.integers(0, 30))):
        t = draw(st.integers(0, 3))
        if t in open_ops:
            op, args = open_ops.pop(t)
            if op == "range":
                result = sorted(set(draw(st.lists(key, max_size=4))))
            else:
                result = draw(st.booleans())
            rec.respond(t, op, args, result)
        else:
            op = draw(st.sampled_from(["contains", "add", "remove", "range"]))
            args = (draw(key), draw(key)) if op == "range" else (draw(key),)
            rec.invoke(t, op, args)
            open_ops[t] = (op, args)
    return rec.events


@given(histories())
def test_round_trip_is_bit_exact(events):
    buf = io.StringIO()
    dump_history(events, buf)
    text = buf.getvalue()
    back = load_history(io.StringIO(text))
    assert back == events
    again = io.StringIO()
    dump_history(back, again)
    assert again.getvalue() == text


def test_file_round_trip(tmp_path):
    rec = Recorder()
    rec.invoke(0, "range", (1, 5))
    rec.invoke(1, "add", (3,))
    rec.respond(1, "add", (3,), True)
    rec.respond(0, "range", (1, 5), [3])
    path = tmp_path / "h.jsonl"
    write_history(rec.events, path)
    first = path.read_bytes()
    write_history(read_history(path), path)
    assert path.read_bytes() == first
    lines = first.decode().splitlines()
    assert lines[0] == '{"kind":"invoke","thread":0,"op":"range","args":[1,5],"index":0}'
    assert lines[3] == '{"kind":"respond","thread":0,"op":"range","args":[1,5],"result":[3],"index":3}'


@pytest.mark.parametrize(
    "line",
    [
        '{"kind":"respond","thread":0,"op":"add","args":[1],"index":0}',
        '{"kind":"invoke","thread":0,"op":"add","args":[1],"result":true,"index":0}',
    ],
)
def test_malformed_lines(line):
    with pytest.raises(ValueError):
        HistoryEvent.from_json(line)


def _ev(kind, t, op, args, i, result=None):
    return HistoryEvent(kind, t, op, tuple(args), i, result)


@pytest.mark.parametrize(
    "events",
    [
        [_ev("respond", 0, "add", [1], 0, True)],
        [_ev("invoke", 0, "add", [1], 0), _ev("invoke", 0, "add", [2], 1)],
        [_ev("invoke", 0, "add", [1], 0), _ev("respond", 0, "remove", [1], 1, True)],
        [_ev("invoke", 0, "add", [1], 0), _ev("respond", 0, "add", [1], 1, [1])],
        [_ev("invoke", 0, "pop", [1], 0)],
        [_ev("begin", 0, "add", [1], 0)],
    ],
)
def test_ill_formed_histories(events):
    with pytest.raises(HistoryError):
        operations(events)


def test_pending_operations():
    ops = operations([_ev("invoke", 0, "add", [1], 0), _ev("invoke", 1, "add", [2], 1), _ev("respond", 1, "add", [2], 2, True)])
    assert ops[0].pending and not ops[1].pending
