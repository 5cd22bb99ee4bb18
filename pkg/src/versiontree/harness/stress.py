"""Multi-threaded stress runs over the public facade."""

from __future__ import annotations

import logging
import random
import sys
import threading
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

from ..core import PhaseCounter
from ..orderedset import OrderedSet
from ..tree import Hook
from .history import HistoryEvent, Recorder
from .workload import WorkloadConfig

log = logging.getLogger(__name__)


@dataclass
class StressResult:
    history: list[HistoryEvent]
    oset: OrderedSet
    completed: int
    op_counts: Counter
    assists: int
    elapsed: float
    watchdog_fired: bool = False
    stuck_at: dict = field(default_factory=dict)  # thread -> last (routine, label)
    errors: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.watchdog_fired and not self.errors


class _Probe:
    """Hook that counts helping and remembers each thread's last step.

    With ``jitter`` > 0 it also yields the interpreter at that fraction of
    shared accesses, so operations interleave more finely.
    """

    def __init__(self, jitter: float = 0.0, seed: int = 0, then: Optional[Hook] = None) -> None:
        self.assists = PhaseCounter()
        self.last: dict[str, tuple[str, str]] = {}
        self.jitter = jitter
        self.then = then
        self._rng = random.Random(seed)

    def __call__(self, routine, label, cell, arg) -> None:
        if cell is None:
            if routine == "assist":
                self.assists.increment()
        else:
            self.last[threading.current_thread().name] = (routine, label)
            if self.jitter and self._rng.random() < self.jitter:
                time.sleep(0)
        if self.then is not None:
            self.then(routine, label, cell, arg)


def run_stress(
    cfg: WorkloadConfig,
    *,
    oset: Optional[OrderedSet] = None,
    instrument: bool = True,
    watchdog_interval: float = 5.0,
    switch_interval: Optional[float] = 1e-5,
    jitter: float = 0.0,
    extra_hook: Optional[Hook] = None,
) -> StressResult:
    """Run ``cfg.threads`` worker threads issuing random operations.

    ``cfg.prefill`` keys are added first.  A watchdog fails the run if no
    operation completes during ``watchdog_interval`` seconds.  A short
    ``switch_interval`` makes the interpreter preempt threads mid-operation;
    ``jitter`` adds random yields at shared accesses (needs ``instrument``).
    ``extra_hook`` runs after the built-in probe at every hook point.
    """
    if oset is None:
        oset = OrderedSet()
    for k in cfg.prefill:
        oset.add(k)
    probe = _Probe(jitter, cfg.seed, extra_hook) if instrument else extra_hook
    oset.hook = probe
    recorder = Recorder()
    done = PhaseCounter()
    per_thread = [Counter() for _ in range(cfg.threads)]
    errors: list[str] = []
    barrier = threading.Barrier(cfg.threads)
    deadline = None

    def worker(tid: int) -> None:
        rng = cfg.thread_rng(tid)
        counts = per_thread[tid]
        barrier.wait()
        n = 0
        while True:
            if deadline is not None:
                if time.monotonic() >= deadline:
                    break
            elif n >= cfg.ops_per_thread:
                break
            op, args = cfg.draw(rng, tid)
            recorder.invoke(tid, op, args)
            try:
                result = getattr(oset, op)(*args)
            except Exception as exc:
                errors.append(f"thread {tid} {op}{args}: {exc!r}")
                return
            recorder.respond(tid, op, args, result)
            counts[op] += 1
            done.increment()
            n += 1

    old_interval = sys.getswitchinterval()
    if switch_interval is not None:
        sys.setswitchinterval(switch_interval)
    threads = [
        threading.Thread(target=worker, args=(i,), name=f"worker-{i}", daemon=True)
        for i in range(cfg.threads)
    ]
    start = time.monotonic()
    if cfg.duration is not None:
        deadline = start + cfg.duration
    fired = False
    try:
        for t in threads:
            t.start()
        last = -1
        while True:
            until = time.monotonic() + watchdog_interval
            for t in threads:
                t.join(max(0.0, until - time.monotonic()))
            if not any(t.is_alive() for t in threads):
                break
            if done.value == last:
                fired = True
                log.error("watchdog: no operation completed in %.1fs", watchdog_interval)
                break
            last = done.value
    finally:
        sys.setswitchinterval(old_interval)
    elapsed = time.monotonic() - start
    if not fired:
        oset.hook = None
    return StressResult(
        history=list(recorder.events),
        oset=oset,
        completed=done.value,
        op_counts=sum(per_thread, Counter()),
        assists=probe.assists.value if instrument else 0,
        elapsed=elapsed,
        watchdog_fired=fired,
        stuck_at=dict(probe.last) if (instrument and fired) else {},
        errors=errors,
    )

