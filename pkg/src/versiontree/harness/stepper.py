"""Deterministic stepper: runs logical threads as greenlets, one shared-memory
access at a time, under a caller-chosen schedule.

Each access the tree reports through its hook becomes a scheduling point.
Recording an invocation or a response in the history is a scheduling point
too, so real-time order in the history follows the schedule.  A
:class:`Monitor` inspects every step and collects invariant violations.

Schedules come from a chooser ``chooser(execution, enabled) -> tid``:
:class:`RandomChooser`, :class:`ReplayChooser`, or the DPOR explorer in
:func:`explore`.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence

from greenlet import GreenletExit, getcurrent, greenlet

from ..core import (
    LEGAL_TRANSITIONS,
    Info,
    InfoState,
    Internal,
    UpdateCell,
    UpdateWord,
    frozen,
    iter_nodes,
)
from ..orderedset import OrderedSet
from ..tree import WRITE_LABELS
from .history import HistoryEvent, Recorder
from .lincheck import Verdict, check_linearizable

Program = Sequence[tuple]  # [(op, args), ...]


class _HistoryCell:
    """Stand-in cell for the history recorder, so recording is a step.
    Responses bump ``value``."""

    __slots__ = ("value",)

    def __init__(self) -> None:
        self.value = 0


@dataclass
class Access:
    thread: int
    routine: str
    label: str
    cell: Any
    arg: Any = None

    def modifies(self) -> bool:
        """Would this access change its cell if taken now?

        Failed CASes and no-op writes behave as reads.  Only response
        records modify the history cell, since a history exposes just the
        order of responses before invocations.
        """
        label = self.label
        if self.routine == "history":
            return label == "respond"
        if label not in WRITE_LABELS:
            return False
        cell = self.cell
        if label == "increment":
            return True
        if label in ("commit-write", "abort-write"):
            return cell.value is not self.arg
        expected = self.arg[0]
        if isinstance(cell, UpdateCell):
            return cell.value == expected
        return cell.value is expected


@dataclass
class StepRecord:
    index: int
    thread: int
    routine: str
    label: str
    changed: bool


_DONE = object()


class PruneExecution(Exception):
    """Raised by a chooser to abandon the current execution."""


class Monitor:
    """Step-level invariant checks.

    * descriptor states only take legal transitions, and terminal states stay;
    * an update cell never returns to a value it held before (no ABA);
    * per descriptor and node, only the first freeze CAS can succeed;
    * per descriptor, only the first child CAS can succeed, and it does;
    * a committed child CAS leaves every version tree older than the
      descriptor's phase unchanged;
    * a successful leaf validation sees the leaf in the current tree, with
      its parent and grandparent unfrozen;
    * no two updates with the same key are imminent at once.
    """

    def __init__(self, oset: OrderedSet, *, version_isolation: bool = True) -> None:
        self.oset = oset
        self.version_isolation = version_isolation
        self.violations: list[str] = []
        self._history: dict[int, tuple[Any, list]] = {}
        self._freeze_attempts: dict[tuple[int, int], int] = {}
        self._freeze_success: dict[tuple[int, int], int] = {}
        self._child_attempts: dict[int, int] = {}
        self._child_success: dict[int, int] = {}
        self._first_freeze: dict[int, tuple[int, int]] = {}  # info id -> (key, step)
        self._committed: dict[int, tuple[Info, int]] = {}
        self.child_cas_checked = 0
        self.step = 0
        # Bookkeeping is keyed by id(); holding the objects keeps ids unique.
        self._keep: list = []
        self._validation: dict[int, list[str]] = {}

    def fail(self, msg: str) -> None:
        self.violations.append(f"step {self.step}: {msg}")

    def before(self, acc: Access):
        cell = acc.cell
        pre = cell.value
        if id(cell) not in self._history:
            self._history[id(cell)] = (cell, [pre])
        snaps = None
        if acc.arg is not None:
            self._keep.append(acc.arg)
        if acc.label == "freeze-cas":
            key = (id(acc.arg[1].info), id(cell))
            self._freeze_attempts[key] = self._freeze_attempts.get(key, 0) + 1
        elif acc.label == "child-cas":
            info = acc.arg[2]
            self._child_attempts[id(info)] = self._child_attempts.get(id(info), 0) + 1
            if self.version_isolation and info.seq:
                tree = self.oset.tree
                snaps = [tree.version_tree(i).signature() for i in range(info.seq)]
        return pre, snaps

    def after(self, acc: Access, token) -> bool:
        pre, snaps = token
        cell = acc.cell
        post = cell.value
        changed = post is not pre
        if changed:
            _, seen = self._history[id(cell)]
            if isinstance(post, InfoState):
                if (pre, post) not in LEGAL_TRANSITIONS:
                    self.fail(f"illegal descriptor transition {pre!r} -> {post!r}")
            elif isinstance(post, UpdateWord):
                if any(post == old for old in seen):
                    self.fail(f"update cell returned to earlier value {post!r}")
            seen.append(post)
        if acc.label == "freeze-cas":
            word = acc.arg[1]
            if post is word and changed:
                key = (id(word.info), id(cell))
                if self._freeze_attempts[key] > 1:
                    self.fail(f"non-first freeze CAS succeeded for {word.info!r}")
                self._freeze_success[key] = self._freeze_success.get(key, 0) + 1
                if self._freeze_success[key] > 1:
                    self.fail(f"two successful freeze CASes on one node for {word.info!r}")
                if acc.routine == "execute":
                    # new_child is unpublished until the child CAS, so its
                    # children still show the update's key.
                    self._first_freeze[id(word.info)] = (update_key(word.info), self.step)
        elif acc.label == "child-cas":
            old, new, info = acc.arg
            ok = pre is old and post is new
            attempts = self._child_attempts[id(info)]
            if ok:
                if attempts > 1:
                    self.fail(f"non-first child CAS succeeded for {info!r}")
                n = self._child_success.get(id(info), 0) + 1
                self._child_success[id(info)] = n
                if n > 1:
                    self.fail(f"second successful child CAS for {info!r}")
                self._committed[id(info)] = (info, self.step)
                if snaps is not None:
                    self.child_cas_checked += 1
                    tree = self.oset.tree
                    for i, sig in enumerate(snaps):
                        if tree.version_tree(i).signature() != sig:
                            self.fail(f"child CAS of phase {info.seq} changed version tree {i}")
            elif attempts == 1:
                self.fail(f"first child CAS failed for {info!r}")
        self.step += 1
        return changed

    def validation(self, tid: int, label: str, arg) -> None:
        """Leaf validation: in the configuration just before the re-read of
        p, the leaf must be in the current tree with p and gp unfrozen.
        Problems are reported only if the validation then succeeds."""
        if label == "validated":
            self.violations.extend(self._validation.pop(tid, ()))
            return
        gp, p, l = arg
        problems = []
        root = self.oset.tree.root
        if frozen(p.update.value) or (p is not root and frozen(gp.update.value)):
            problems.append(f"step {self.step}: validated through a frozen node above {l!r}")
        node = root
        while isinstance(node, Internal) and node is not l:
            node = (node.left if l.key < node.key else node.right).value
        if node is not l:
            problems.append(f"step {self.step}: validated {l!r}, which is not in the current tree")
        self._validation[tid] = problems

    def finish(self) -> None:
        # Imminence intervals: [first freeze, successful child CAS).
        spans: dict[int, list[tuple[int, int]]] = {}
        for key, (info, done) in self._committed.items():
            start = self._first_freeze.get(key)
            if start is None:
                self.fail(f"{info!r} committed without a first freeze")
                continue
            spans.setdefault(start[0], []).append((start[1], done))
        for k, intervals in spans.items():
            intervals.sort()
            for (s1, e1), (s2, e2) in zip(intervals, intervals[1:]):
                if s2 < e1:
                    self.fail(f"two imminent updates on key {k} (steps {s1}-{e1} and {s2}-{e2})")


def update_key(info: Info) -> int:
    """The key an insert or delete descriptor acts on."""
    if len(info.nodes) == 2:
        old = info.old_child.key
        left, right = info.new_child.left.value, info.new_child.right.value
        return left.key if left.key != old else right.key
    return info.nodes[2].key


def tree_hash(oset: OrderedSet) -> str:
    """Structural hash of everything reachable, independent of object ids."""
    tree = oset.tree
    nodes = list(iter_nodes(tree.root))
    num = {id(n): i for i, n in enumerate(nodes)}
    infos: dict[int, int] = {}
    parts = [f"counter={tree.counter.value}"]
    for n in nodes:
        up = n.update.value
        info_no = infos.setdefault(id(up.info), len(infos))
        row = [type(n).__name__, n.key, n.seq, num.get(id(n.prev)), up.tag.name, info_no, up.info.state.value.name]
        if isinstance(n, Internal):
            row += [num[id(n.left.value)], num[id(n.right.value)]]
        parts.append(repr(row))
    return hashlib.sha256("\n".join(parts).encode()).hexdigest()


@dataclass
class Execution:
    """Outcome of one scheduled run."""

    schedule: list[int] = field(default_factory=list)
    trace: list[StepRecord] = field(default_factory=list)
    history: list[HistoryEvent] = field(default_factory=list)
    results: list[list] = field(default_factory=list)
    completed: list[bool] = field(default_factory=list)
    suspended: set = field(default_factory=set)
    steps_by_thread: list[int] = field(default_factory=list)
    violations: list[str] = field(default_factory=list)
    assists: int = 0
    timed_out: bool = False
    pruned: bool = False
    final_hash: str = ""
    oset: Optional[OrderedSet] = None
    monitor: Optional[Monitor] = None
    pending: dict = field(default_factory=dict)  # tid -> Access, while running
    step: int = 0

    def suspend(self, tid: int) -> None:
        self.suspended.add(tid)

    def labelled_schedule(self) -> list[tuple[int, str]]:
        return [(r.thread, f"{r.routine}/{r.label}") for r in self.trace]

    def linearizability(self, initial=()) -> Verdict:
        return check_linearizable(self.history, initial=initial)


class _Task:
    __slots__ = ("tid", "glet", "results")

    def __init__(self, tid: int) -> None:
        self.tid = tid
        self.glet: Optional[greenlet] = None
        self.results: list = []


class Stepper:
    """Run ``programs`` (one per logical thread) under a schedule.

    ``prefill`` keys are added before any thread starts, without
    instrumentation.  ``suspend_when(execution, record)`` may return True to
    permanently suspend the thread that just took the step ``record``.
    """

    def __init__(
        self,
        programs: Sequence[Program],
        *,
        prefill: Sequence[int] = (),
        check: bool = True,
        version_isolation: bool = True,
        max_steps: int = 100_000,
        suspend_when: Optional[Callable[[Execution, StepRecord], bool]] = None,
    ) -> None:
        self.programs = [list(p) for p in programs]
        self.prefill = list(prefill)
        self.check = check
        self.version_isolation = version_isolation
        self.max_steps = max_steps
        self.suspend_when = suspend_when

    def run(self, chooser: Callable[[Execution, list[int]], int]) -> Execution:
        oset = OrderedSet()
        for k in self.prefill:
            oset.add(k)
        ex = Execution(oset=oset)
        recorder = Recorder()
        hcell = _HistoryCell()
        main = getcurrent()
        tasks = [_Task(i) for i in range(len(self.programs))]
        by_glet: dict[Any, _Task] = {}

        def hook(routine, label, cell, arg):
            task = by_glet.get(getcurrent())
            if task is None:
                return
            if cell is None:
                if routine == "assist":
                    ex.assists += 1
                elif routine == "validate_leaf" and monitor is not None:
                    monitor.validation(task.tid, label, arg)
                return
            main.switch(Access(task.tid, routine, label, cell, arg))

        def body(task: _Task, program: Program):
            def run():
                for op, args in program:
                    main.switch(Access(task.tid, "history", "invoke", hcell))
                    recorder.invoke(task.tid, op, args)
                    result = getattr(oset, op)(*args)
                    main.switch(Access(task.tid, "history", "respond", hcell))
                    hcell.value += 1
                    recorder.respond(task.tid, op, args, result)
                    task.results.append(result)
                return _DONE

            return run

        monitor = Monitor(oset, version_isolation=self.version_isolation) if self.check else None
        ex.monitor = monitor
        oset.hook = hook
        ex.completed = [False] * len(tasks)
        ex.steps_by_thread = [0] * len(tasks)
        for task, program in zip(tasks, self.programs):
            task.glet = greenlet(body(task, program), parent=main)
            by_glet[task.glet] = task
            self._advance(ex, task, task.glet.switch)

        try:
            while True:
                enabled = [t.tid for t in tasks if not ex.completed[t.tid] and t.tid not in ex.suspended]
                if not enabled:
                    break
                if ex.step >= self.max_steps:
                    ex.timed_out = True
                    break
                try:
                    tid = chooser(ex, enabled)
                except PruneExecution:
                    ex.pruned = True
                    break
                if tid not in enabled:
                    raise ValueError(f"chooser picked thread {tid}, not in {enabled}")
                task = tasks[tid]
                acc = ex.pending[tid]
                token = monitor.before(acc) if monitor and acc.routine != "history" else None
                pre = acc.cell.value
                self._advance(ex, task, task.glet.switch)
                if token is not None:
                    changed = monitor.after(acc, token)
                else:
                    changed = acc.cell.value is not pre
                    if monitor:
                        monitor.step += 1
                rec = StepRecord(ex.step, tid, acc.routine, acc.label, changed)
                ex.schedule.append(tid)
                ex.trace.append(rec)
                ex.steps_by_thread[tid] += 1
                ex.step += 1
                if self.suspend_when is not None and not ex.completed[tid] and self.suspend_when(ex, rec):
                    ex.suspended.add(tid)
        finally:
            oset.hook = None
            for task in tasks:
                if not task.glet.dead:
                    task.glet.throw(GreenletExit)
        ex.results = [t.results for t in tasks]
        ex.history = list(recorder.events)
        if monitor is not None and not ex.pruned:
            monitor.finish()
            ex.violations.extend(monitor.violations)
        ex.final_hash = tree_hash(oset)
        return ex

    @staticmethod
    def _advance(ex: Execution, task: _Task, resume) -> None:
        try:
            out = resume()
        except Exception as exc:  # a crash inside the library is a violation
            ex.violations.append(f"thread {task.tid} raised {exc!r}")
            out = _DONE
        if out is _DONE:
            ex.completed[task.tid] = True
            ex.pending.pop(task.tid, None)
        else:
            ex.pending[task.tid] = out


class RandomChooser:
    def __init__(self, seed: int) -> None:
        self.rng = random.Random(seed)

    def __call__(self, ex: Execution, enabled: list[int]) -> int:
        return self.rng.choice(enabled)


class ScheduleError(ValueError):
    pass


class ReplayChooser:
    """Follow a recorded schedule of thread ids or (thread, label) pairs.

    Labels, when given, must match the step the thread is about to take.
    Past the end of the schedule the lowest enabled thread runs.
    """

    def __init__(self, schedule: Sequence) -> None:
        self.schedule = list(schedule)

    def __call__(self, ex: Execution, enabled: list[int]) -> int:
        if ex.step >= len(self.schedule):
            return enabled[0]
        entry = self.schedule[ex.step]
        if isinstance(entry, int):
            return entry
        tid, label = entry
        if tid not in enabled:
            raise ScheduleError(f"step {ex.step}: thread {tid} is not runnable")
        acc = ex.pending[tid]
        actual = f"{acc.routine}/{acc.label}"
        if actual != label:
            raise ScheduleError(f"step {ex.step}: thread {tid} is at {actual}, schedule says {label}")
        return tid


@dataclass
class Schedule:
    """A replayable stepper run: programs, prefill and the step choices."""

    programs: list
    prefill: list = field(default_factory=list)
    steps: list = field(default_factory=list)  # [(tid, "routine/label"), ...]
    seed: Optional[int] = None

    def to_json(self) -> str:
        obj = {
            "programs": [[[op, list(args)] for op, args in prog] for prog in self.programs],
            "prefill": list(self.prefill),
            "seed": self.seed,
            "steps": [[t, label] for t, label in self.steps],
        }
        return json.dumps(obj, separators=(",", ":")) + "\n"

    @classmethod
    def from_json(cls, text: str) -> Schedule:
        obj = json.loads(text)
        try:
            programs = [[(op, tuple(args)) for op, args in prog] for prog in obj["programs"]]
            steps = [(int(t), str(label)) for t, label in obj.get("steps", [])]
        except (KeyError, TypeError, ValueError) as exc:
            raise ScheduleError(f"malformed schedule: {exc}") from None
        return cls(programs, list(obj.get("prefill", [])), steps, obj.get("seed"))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fp:
            fp.write(self.to_json())

    @classmethod
    def load(cls, path) -> Schedule:
        with open(path, encoding="utf-8") as fp:
            return cls.from_json(fp.read())


@dataclass
class StepperReport:
    execution: Execution
    verdict: Verdict
    schedule: Schedule

    @property
    def ok(self) -> bool:
        ex = self.execution
        return not ex.violations and not ex.timed_out and self.verdict.ok

    def dump(self) -> str:
        """Human-readable trace, with enough to replay the run."""
        ex = self.execution
        lines = [f"verdict: {self.verdict.status}"]
        lines += [f"violation: {v}" for v in ex.violations]
        if ex.timed_out:
            lines.append("timed out")
        for r in ex.trace:
            lines.append(f"{r.index:6d}  T{r.thread}  {r.routine}/{r.label}{'  *' if r.changed else ''}")
        lines.append(f"final tree hash {ex.final_hash}")
        return "\n".join(lines)


def run_stepper(
    script,
    *,
    programs: Optional[Sequence[Program]] = None,
    prefill: Sequence[int] = (),
    max_steps: int = 100_000,
) -> StepperReport:
    """Run one stepper execution.

    ``script`` is either a :class:`Schedule` to replay or an integer seed for
    a uniformly random schedule over ``programs``.
    """
    if isinstance(script, Schedule):
        programs, prefill = script.programs, script.prefill
        chooser = ReplayChooser(script.steps)
        seed = script.seed
    else:
        if programs is None:
            raise ValueError("a random schedule needs programs")
        seed = int(script)
        chooser = RandomChooser(seed)
    stepper = Stepper(programs, prefill=prefill, max_steps=max_steps)
    ex = stepper.run(chooser)
    verdict = ex.linearizability(initial=prefill)
    sched = Schedule([list(p) for p in programs], list(prefill), ex.labelled_schedule(), seed)
    return StepperReport(ex, verdict, sched)


# --- exhaustive exploration -------------------------------------------------


@dataclass
class _Frame:
    enabled: list[int]
    backtrack: set
    done: set
    sleep: set
    pending: dict  # tid -> (cell id, write), refreshed on every replay
    chosen: int = -1


class _Dpor:
    """Stateless dynamic partial-order reduction with sleep sets
    (Flanagan & Godefroid).

    Two steps are dependent when they touch the same cell and at least one
    of them modifies it, judged at the state where the step is taken.
    Happens-before is tracked with vector clocks.
    """

    def __init__(self, nthreads: int) -> None:
        self.n = nthreads
        self.frames: list[_Frame] = []
        self._reset()

    def _reset(self) -> None:
        self.steps: list[tuple[int, int, bool, tuple]] = []  # (tid, cell id, write, clock)
        self.clock = [tuple([0] * self.n) for _ in range(self.n)]
        self.cells: dict[int, tuple[tuple, tuple]] = {}  # cell id -> (last write clock, reads join)

    @staticmethod
    def _join(a: tuple, b: tuple) -> tuple:
        return tuple(x if x >= y else y for x, y in zip(a, b))

    @staticmethod
    def _dependent(a: tuple, b: tuple) -> bool:
        return a[0] == b[0] and (a[1] or b[1])

    def _last_dependent(self, q: int, cell: int, write: bool) -> int:
        cq = self.clock[q]
        for j in range(len(self.steps) - 1, -1, -1):
            tid, c, w, clk = self.steps[j]
            if c != cell or tid == q or not (w or write):
                continue
            if clk[tid] <= cq[tid]:
                continue  # j happens-before q
            return j
        return -1

    def __call__(self, ex: Execution, enabled: list[int]) -> int:
        d = ex.step
        pending = {q: (id(ex.pending[q].cell), ex.pending[q].modifies()) for q in enabled}
        if d < len(self.frames):
            frame = self.frames[d]
            if frame.enabled != enabled:
                raise RuntimeError("nondeterministic replay under DPOR")
            frame.pending = pending
        else:
            for q in enabled:
                j = self._last_dependent(q, *pending[q])
                if j >= 0:
                    pre = self.frames[j]
                    if q in pre.enabled:
                        pre.backtrack.add(q)
                    else:
                        pre.backtrack.update(pre.enabled)
            if d:
                parent = self.frames[d - 1]
                t = parent.chosen
                sleep = {
                    q
                    for q in (parent.sleep | parent.done) - {t}
                    if q in pending and not self._dependent(parent.pending[q], parent.pending[t])
                }
            else:
                sleep = set()
            awake = [q for q in enabled if q not in sleep]
            if not awake:
                raise PruneExecution
            frame = _Frame(list(enabled), {awake[0]}, {awake[0]}, sleep, pending, awake[0])
            self.frames.append(frame)
        tid = frame.chosen
        self._record(tid, *pending[tid])
        return tid

    def _record(self, tid: int, cell: int, write: bool) -> None:
        clk = self.clock[tid]
        wclk, rjoin = self.cells.get(cell, (None, None))
        if wclk is not None:
            clk = self._join(clk, wclk)
        if write and rjoin is not None:
            clk = self._join(clk, rjoin)
        clk = tuple(v + 1 if i == tid else v for i, v in enumerate(clk))
        self.clock[tid] = clk
        if write:
            self.cells[cell] = (clk, None)
        else:
            self.cells[cell] = (wclk, clk if rjoin is None else self._join(rjoin, clk))
        self.steps.append((tid, cell, write, clk))

    def next_execution(self) -> bool:
        """Pick the next branch; False once the space is exhausted."""
        while self.frames:
            frame = self.frames[-1]
            todo = frame.backtrack - frame.done - frame.sleep
            if todo:
                t = min(todo)
                frame.done.add(t)
                frame.chosen = t
                self._reset()
                return True
            self.frames.pop()
        return False


@dataclass
class Exploration:
    executions: int = 0
    pruned: int = 0
    complete: bool = False
    failures: list[Execution] = field(default_factory=list)
    outcomes: dict = field(default_factory=dict)  # results tuple -> count


def explore(
    stepper: Stepper,
    *,
    max_executions: int = 10**7,
    on_execution: Optional[Callable[[Execution], bool]] = None,
    keep_failures: int = 5,
) -> Exploration:
    """Run every interleaving of ``stepper``'s programs up to DPOR equivalence.

    ``on_execution`` returns True when an execution is acceptable; failing
    executions (and those with monitor violations) are collected.
    """
    dpor = _Dpor(len(stepper.programs))
    out = Exploration()
    while True:
        ex = stepper.run(dpor)
        if ex.pruned:
            out.pruned += 1
            if not dpor.next_execution():
                out.complete = True
                break
            continue
        out.executions += 1
        key = repr(ex.results)
        out.outcomes[key] = out.outcomes.get(key, 0) + 1
        ok = not ex.violations and not ex.timed_out
        if ok and on_execution is not None:
            ok = on_execution(ex)
        if not ok and len(out.failures) < keep_failures:
            out.failures.append(ex)
        ex.oset = None
        ex.monitor = None
        if not dpor.next_execution():
            out.complete = True
            break
        if out.executions >= max_executions:
            break
    return out
