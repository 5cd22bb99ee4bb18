"""Throughput benchmark over real threads, with instrumentation off."""

from __future__ import annotations

import platform
import threading
import time
from collections import defaultdict
from dataclasses import replace
from typing import Sequence

import jsonschema

from ..orderedset import OrderedSet
from .workload import OP_NAMES, WorkloadConfig

REPORT_VERSION = 1

_PER_OP = {
    "type": "object",
    "required": ["count", "ops_per_sec", "mean_latency_us"],
    "properties": {
        "count": {"type": "integer", "minimum": 0},
        "ops_per_sec": {"type": "number", "minimum": 0},
        "mean_latency_us": {"type": "number", "minimum": 0},
    },
}

REPORT_SCHEMA = {
    "type": "object",
    "required": ["version", "config", "python", "runs"],
    "properties": {
        "version": {"const": REPORT_VERSION},
        "config": {"type": "object"},
        "python": {"type": "string"},
        "runs": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["threads", "ops", "elapsed_s", "ops_per_sec", "per_op"],
                "properties": {
                    "threads": {"type": "integer", "minimum": 1},
                    "ops": {"type": "integer", "minimum": 0},
                    "elapsed_s": {"type": "number", "minimum": 0},
                    "ops_per_sec": {"type": "number", "minimum": 0},
                    "per_op": {
                        "type": "object",
                        "propertyNames": {"enum": list(OP_NAMES)},
                        "additionalProperties": _PER_OP,
                    },
                },
            },
        },
    },
}


def validate_report(report: dict) -> None:
    jsonschema.validate(report, REPORT_SCHEMA)


def _run_once(cfg: WorkloadConfig) -> dict:
    oset = OrderedSet()
    for k in cfg.prefill:
        oset.add(k)
    programs = [cfg.program(t) for t in range(cfg.threads)]
    counts = [defaultdict(int) for _ in programs]
    busy = [defaultdict(float) for _ in programs]
    barrier = threading.Barrier(cfg.threads + 1)
    clock = time.perf_counter

    def worker(tid: int) -> None:
        calls = [(getattr(oset, op), op, args) for op, args in programs[tid]]
        n, t = counts[tid], busy[tid]
        barrier.wait()
        for fn, op, args in calls:
            t0 = clock()
            fn(*args)
            t[op] += clock() - t0
            n[op] += 1

    threads = [threading.Thread(target=worker, args=(i,)) for i in range(cfg.threads)]
    for th in threads:
        th.start()
    barrier.wait()
    start = clock()
    for th in threads:
        th.join()
    elapsed = clock() - start
    per_op = {}
    total = 0
    for op in OP_NAMES:
        c = sum(n[op] for n in counts)
        if not c:
            continue
        spent = sum(t[op] for t in busy)
        total += c
        per_op[op] = {
            "count": c,
            # completions of this type per wall-clock second, all threads
            "ops_per_sec": c / elapsed if elapsed else 0.0,
            # includes time spent preempted while the call was in progress
            "mean_latency_us": spent / c * 1e6,
        }
    return {
        "threads": cfg.threads,
        "ops": total,
        "elapsed_s": elapsed,
        "ops_per_sec": total / elapsed if elapsed else 0.0,
        "per_op": per_op,
    }


def run_bench(cfg: WorkloadConfig, thread_counts: Sequence[int] = ()) -> dict:
    """Measure throughput at each thread count (default: just ``cfg.threads``).

    Each thread issues ``cfg.ops_per_thread`` operations drawn from the mix.
    In disjoint mode the padding keys are prefilled.  Returns a report that
    satisfies :data:`REPORT_SCHEMA`.
    """
    runs = []
    for n in thread_counts or (cfg.threads,):
        c = replace(cfg, threads=n)
        if c.disjoint:
            c = c.with_padding()
        runs.append(_run_once(c))
    report = {
        "version": REPORT_VERSION,
        "config": cfg.to_dict(),
        "python": f"{platform.python_implementation()} {platform.python_version()}",
        "runs": runs,
    }
    validate_report(report)
    return report
