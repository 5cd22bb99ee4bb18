"""Invocation/response histories and their JSON-lines file format."""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from typing import IO, Any, Iterable, Optional

OPS = ("contains", "add", "remove", "range")
INVOKE = "invoke"
RESPOND = "respond"

_MISSING = object()


@dataclass(frozen=True)
class HistoryEvent:
    kind: str
    thread: int
    op: str
    args: tuple
    index: int
    result: Any = None

    def to_json(self) -> str:
        obj = {"kind": self.kind, "thread": self.thread, "op": self.op, "args": list(self.args)}
        if self.kind == RESPOND:
            obj["result"] = list(self.result) if self.op == "range" else self.result
        obj["index"] = self.index
        return json.dumps(obj, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> HistoryEvent:
        obj = json.loads(line)
        result = obj.get("result", _MISSING)
        if obj["kind"] == RESPOND:
            if result is _MISSING:
                raise ValueError(f"respond event without result: {line!r}")
            if obj["op"] == "range":
                result = tuple(result)
        elif result is not _MISSING:
            raise ValueError(f"invoke event with result: {line!r}")
        else:
            result = None
        return cls(obj["kind"], obj["thread"], obj["op"], tuple(obj["args"]), obj["index"], result)


class HistoryError(ValueError):
    pass


@dataclass
class Operation:
    """One invoke/respond pair; ``respond`` is None for pending operations."""

    id: int
    thread: int
    op: str
    args: tuple
    invoke: int
    respond: Optional[int] = None
    result: Any = None

    @property
    def pending(self) -> bool:
        return self.respond is None


class Recorder:
    """Thread-safe history recorder.  Event order is the real-time order."""

    def __init__(self) -> None:
        self.events: list[HistoryEvent] = []
        self._lock = threading.Lock()

    def invoke(self, thread: int, op: str, args: tuple) -> None:
        with self._lock:
            self.events.append(HistoryEvent(INVOKE, thread, op, tuple(args), len(self.events)))

    def respond(self, thread: int, op: str, args: tuple, result: Any) -> None:
        if op == "range":
            result = tuple(result)
        with self._lock:
            self.events.append(
                HistoryEvent(RESPOND, thread, op, tuple(args), len(self.events), result)
            )


def operations(events: Iterable[HistoryEvent]) -> list[Operation]:
    """Pair up invoke/respond events, validating well-formedness."""
    ops: list[Operation] = []
    open_ops: dict[int, Operation] = {}
    for pos, ev in enumerate(events):
        if ev.op not in OPS:
            raise HistoryError(f"unknown operation {ev.op!r} at event {pos}")
        if ev.kind == INVOKE:
            if ev.thread in open_ops:
                raise HistoryError(f"thread {ev.thread} invokes while an operation is open")
            op = Operation(len(ops), ev.thread, ev.op, ev.args, pos)
            ops.append(op)
            open_ops[ev.thread] = op
        elif ev.kind == RESPOND:
            op = open_ops.pop(ev.thread, None)
            if op is None or op.op != ev.op or op.args != ev.args:
                raise HistoryError(f"respond at event {pos} matches no open invoke")
            if ev.op == "range":
                ok = isinstance(ev.result, tuple)
            else:
                ok = isinstance(ev.result, bool)
            if not ok:
                raise HistoryError(f"malformed result {ev.result!r} at event {pos}")
            op.respond = pos
            op.result = ev.result
        else:
            raise HistoryError(f"unknown event kind {ev.kind!r}")
    return ops


def dump_history(events: Iterable[HistoryEvent], fp: IO[str]) -> None:
    for ev in events:
        fp.write(ev.to_json())
        fp.write("\n")


def load_history(fp: IO[str]) -> list[HistoryEvent]:
    return [HistoryEvent.from_json(line) for line in fp if line.strip()]


def write_history(events: Iterable[HistoryEvent], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fp:
        dump_history(events, fp)


def read_history(path) -> list[HistoryEvent]:
    with open(path, encoding="utf-8") as fp:
        return load_history(fp)
