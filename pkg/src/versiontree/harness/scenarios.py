"""Stepper scenarios behind the harness properties: random schedules, crashed
updaters, scans running alone, and the insert/scan/find race."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

from ..core import Internal
from ..rangescan import reconstruct_version_tree
from .stepper import Execution, Exploration, RandomChooser, StepRecord, Stepper, explore
from .workload import WorkloadConfig

# Hooked steps per internal node a scan visits: update, state, two children.
SCAN_STEPS_PER_NODE = 4
# Fixed scan overhead: invoke, counter read, increment, respond.
SCAN_OVERHEAD = 4
# Upper bound on steps to help one descriptor through to a terminal state.
HELP_STEPS = 24


def small_programs(seed: int, *, threads: int = 3, ops: int = 2, keys=(0, 3), mix=(25, 30, 25, 20)):
    cfg = WorkloadConfig(threads=threads, ops_per_thread=ops, key_space=keys, mix=mix, range_width=3, seed=seed)
    return [cfg.program(t) for t in range(threads)]


def small_prefill(seed: int, keys=(0, 3)) -> list[int]:
    rng = random.Random(seed ^ 0x5EED)
    return [k for k in range(keys[0], keys[1] + 1) if rng.random() < 0.5]


@dataclass
class Tally:
    runs: int = 0
    bad: list = field(default_factory=list)  # (seed, reason)
    extra: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.bad

    def fail(self, seed, reason: str) -> None:
        self.bad.append((seed, reason))


def random_schedules(n: int, *, start: int = 0) -> Tally:
    """Random schedules over small random programs with every monitor check on.

    ``extra["child_cas_checked"]`` counts committed child CASes whose older
    version trees were compared before and after.
    """
    out = Tally(extra={"child_cas_checked": 0, "violations": 0})
    for seed in range(start, start + n):
        programs = small_programs(seed)
        prefill = small_prefill(seed)
        ex = Stepper(programs, prefill=prefill).run(RandomChooser(seed))
        out.runs += 1
        out.extra["child_cas_checked"] += ex.monitor.child_cas_checked
        out.extra["violations"] += len(ex.violations)
        if ex.violations:
            out.fail(seed, "; ".join(ex.violations))
        elif ex.timed_out:
            out.fail(seed, "timed out")
        elif not ex.linearizability(initial=prefill).ok:
            out.fail(seed, "not linearizable")
    return out


def _crash_after_first_freeze(victim: int):
    def suspend_when(ex: Execution, rec: StepRecord) -> bool:
        return rec.thread == victim and rec.routine == "execute" and rec.label == "freeze-cas" and rec.changed

    return suspend_when


def crash_schedules(n: int, *, start: int = 0, max_tries: Optional[int] = None) -> Tally:
    """``n`` schedules that permanently suspend one thread right after its
    first successful freeze CAS.  Every other thread must finish.

    Seeds whose victim never reaches a freeze CAS are skipped and counted in
    ``extra["skipped"]``.
    """
    out = Tally(extra={"skipped": 0})
    seed = start
    limit = max_tries if max_tries is not None else 20 * n
    while out.runs < n and seed - start < limit:
        rng = random.Random(seed)
        programs = small_programs(seed, mix=(10, 45, 35, 10))
        prefill = small_prefill(seed)
        victim = rng.randrange(len(programs))
        stepper = Stepper(programs, prefill=prefill, suspend_when=_crash_after_first_freeze(victim))
        ex = stepper.run(RandomChooser(seed))
        seed += 1
        if victim not in ex.suspended:
            out.extra["skipped"] += 1
            continue
        out.runs += 1
        others = [t for t in range(len(programs)) if t != victim]
        if ex.timed_out or not all(ex.completed[t] for t in others):
            out.fail(seed - 1, "a live thread did not finish")
        elif ex.violations:
            out.fail(seed - 1, "; ".join(ex.violations))
        elif not ex.linearizability(initial=prefill).ok:
            out.fail(seed - 1, "not linearizable")
    return out


class _UpdatersThenScan:
    """Run updaters at random for ``prefix`` steps, suspend them all, then let
    the scanner run alone."""

    def __init__(self, seed: int, scanner: int, prefix: int) -> None:
        self.rng = random.Random(seed)
        self.scanner = scanner
        self.prefix = prefix
        self.alone_from: Optional[int] = None

    def __call__(self, ex: Execution, enabled: list[int]) -> int:
        if self.alone_from is None:
            updaters = [t for t in enabled if t != self.scanner]
            if ex.step < self.prefix and updaters:
                return self.rng.choice(updaters)
            for t in updaters:
                ex.suspend(t)
            self.alone_from = ex.step
        return self.scanner


def scan_step_bound(root: Internal, seq: int, helped: int) -> tuple[int, int, int]:
    """(bound, version-tree nodes, prev hops) for a scan at phase ``seq``."""
    vt = reconstruct_version_tree(root, seq)
    hops = 0
    for node in vt.nodes:
        if isinstance(node, Internal):
            for cell in (node.left, node.right):
                child = cell.value
                while child.seq > seq:
                    child = child.prev
                    hops += 1
    internal = sum(isinstance(n, Internal) for n in vt.nodes)
    bound = SCAN_STEPS_PER_NODE * internal + hops + SCAN_OVERHEAD + HELP_STEPS * helped
    return bound, len(vt.nodes), hops


def scan_wait_freedom(n: int, *, start: int = 0, updaters: int = 3) -> Tally:
    """Suspend every updater at a random point and run one scan alone.

    The scan must finish within :func:`scan_step_bound`; the monitor's
    checks stay on.
    """
    out = Tally(extra={"max_steps": 0, "max_ratio": 0.0})
    for seed in range(start, start + n):
        rng = random.Random(seed)
        programs = small_programs(seed, threads=updaters, ops=3, keys=(0, 7), mix=(10, 45, 35, 10))
        scanner = len(programs)
        programs.append([("range", (0, 7))])
        prefill = small_prefill(seed, keys=(0, 7))
        chooser = _UpdatersThenScan(seed, scanner, rng.randrange(0, 120))
        stepper = Stepper(programs, prefill=prefill, max_steps=20_000)
        ex = stepper.run(chooser)
        out.runs += 1
        if not ex.completed[scanner]:
            out.fail(seed, "scan did not complete")
            continue
        if ex.violations:
            out.fail(seed, "; ".join(ex.violations))
            continue
        seq = ex.oset.phase - 1  # the scanner is the only thread that increments
        stalled = sum(1 for t in range(scanner) if not ex.completed[t])
        bound, _, _ = scan_step_bound(ex.oset.tree.root, seq, stalled)
        steps = ex.steps_by_thread[scanner]
        out.extra["max_steps"] = max(out.extra["max_steps"], steps)
        out.extra["max_ratio"] = max(out.extra["max_ratio"], steps / bound)
        if steps > bound:
            out.fail(seed, f"scan took {steps} steps, bound {bound}")
    return out


INSERT_SCAN_FIND = [[("add", (1,))], [("range", (0, 10))], [("contains", (1,))]]


def insert_scan_find(max_executions: int = 10**7) -> Exploration:
    """Every interleaving (up to equivalence) of Insert(1) against a scan and a
    Find(1); each execution must be linearizable and pass the monitor."""
    return explore(
        Stepper(INSERT_SCAN_FIND),
        max_executions=max_executions,
        on_execution=lambda ex: ex.linearizability().ok,
    )


def paused_insert_scan(pause_label: str) -> Execution:
    """Pause add(1) right after its ``pause_label`` step inside its own help
    path (``execute/freeze-cas`` or ``help/try-cas``), run range(0, 10) to
    completion, then let the insert finish."""
    routine, label = pause_label.split("/")
    paused = {"done": False}

    def chooser(ex: Execution, enabled: list[int]) -> int:
        if not paused["done"] and 0 in enabled:
            rec = ex.trace[-1] if ex.trace else None
            if rec is not None and rec.thread == 0 and (rec.routine, rec.label) == (routine, label) and rec.changed:
                paused["done"] = True
            else:
                return 0
        if 1 in enabled:
            return 1
        return enabled[0]

    return Stepper([[("add", (1,))], [("range", (0, 10))]]).run(chooser)
