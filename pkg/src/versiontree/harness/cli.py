"""``versiontree-harness`` command line.

Exit codes: 0 pass, 1 property violation, 2 inconclusive, 3 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Optional, Sequence

from .bench import run_bench
from .history import read_history, write_history
from .lincheck import DEFAULT_MAX_STATES, INCONCLUSIVE, LINEARIZABLE, check_linearizable
from .stepper import Schedule, ScheduleError, run_stepper
from .stress import run_stress
from .workload import MODES, ConfigError, WorkloadConfig

EXIT_PASS, EXIT_VIOLATION, EXIT_INCONCLUSIVE, EXIT_USAGE = 0, 1, 2, 3

log = logging.getLogger("versiontree.harness")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _key_range(text: str) -> tuple[int, int]:
    lo, sep, hi = text.partition(":")
    if not sep:
        raise argparse.ArgumentTypeError("expected LO:HI")
    try:
        return int(lo), int(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad key range {text!r}") from None


def _mix(text: str) -> tuple[int, ...]:
    try:
        parts = tuple(int(p) for p in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad mix {text!r}") from None
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("mix needs four parts c:a:r:s")
    return parts


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="versiontree-harness", description="Stress, check and benchmark the ordered set.")
    p.add_argument("mode", choices=MODES)
    p.add_argument("--threads", type=int, default=4)
    p.add_argument("--ops", type=int, default=100, help="operations per thread")
    p.add_argument("--duration", type=float, default=None, help="seconds; overrides --ops (stress, lincheck)")
    p.add_argument("--keys", type=_key_range, default=(0, 7), metavar="LO:HI")
    p.add_argument("--mix", type=_mix, default=(40, 25, 25, 10), metavar="c:a:r:s")
    p.add_argument("--range-width", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, metavar="PATH")
    p.add_argument("--schedule", default=None, metavar="FILE", help="stepper schedule to replay")
    p.add_argument("--disjoint", action="store_true", help="give each thread its own key slice")
    p.add_argument("--runs", type=int, default=1, help="repetitions with consecutive seeds (stress, lincheck)")
    p.add_argument("--history", default=None, metavar="FILE", help="lincheck an existing history file")
    p.add_argument("--jitter", type=float, default=0.0, help="yield probability per shared access (stress, lincheck)")
    p.add_argument("--max-states", type=int, default=DEFAULT_MAX_STATES, help="lincheck search budget")
    p.add_argument("--bench-threads", default=None, metavar="N,N,...", help="thread counts to benchmark")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _config(args, seed: Optional[int] = None) -> WorkloadConfig:
    cfg = WorkloadConfig(
        threads=args.threads,
        ops_per_thread=args.ops,
        duration=args.duration,
        key_space=args.keys,
        mix=args.mix,
        range_width=args.range_width,
        seed=args.seed if seed is None else seed,
        mode=args.mode,
        disjoint=args.disjoint,
    )
    return cfg.with_padding() if cfg.disjoint else cfg


def _write_json(path: Optional[str], obj) -> None:
    text = json.dumps(obj, indent=2) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fp:
            fp.write(text)


def _stress(args) -> int:
    code = EXIT_PASS
    for i in range(args.runs):
        cfg = _config(args, args.seed + i)
        res = run_stress(cfg, jitter=args.jitter)
        if args.out:
            write_history(res.history, args.out if args.runs == 1 else f"{args.out}.{i}")
        if not res.ok:
            log.error("seed %d: watchdog=%s errors=%s stuck=%s", cfg.seed, res.watchdog_fired, res.errors, res.stuck_at)
            code = EXIT_VIOLATION
            continue
        tree = res.oset.tree
        for phase in range(tree.counter.value + 1):
            problems = tree.version_tree(phase).check_bst()
            if problems:
                log.error("seed %d: version tree %d: %s", cfg.seed, phase, problems[0])
                code = EXIT_VIOLATION
        print(f"seed {cfg.seed}: {res.completed} ops, {res.assists} assists, {res.elapsed:.2f}s")
    return code


def _lincheck(args) -> int:
    if args.history:
        runs = [(None, read_history(args.history), ())]
    else:
        runs = []
        for i in range(args.runs):
            cfg = _config(args, args.seed + i)
            res = run_stress(cfg, jitter=args.jitter)
            if not res.ok:
                log.error("seed %d: stress run failed: %s", cfg.seed, res.errors or "watchdog")
                return EXIT_VIOLATION
            runs.append((cfg.seed, res.history, cfg.prefill))
    violation = inconclusive = False
    for seed, history, initial in runs:
        verdict = check_linearizable(history, initial=initial, max_states=args.max_states)
        tag = "file" if seed is None else f"seed {seed}"
        print(f"{tag}: {verdict.status} ({len(history)} events, {verdict.states} states)")
        if verdict.status == LINEARIZABLE:
            continue
        if verdict.status == INCONCLUSIVE:
            inconclusive = True
            continue
        violation = True
        if args.out:
            write_history(verdict.violating_prefix, args.out)
    if violation:
        return EXIT_VIOLATION
    return EXIT_INCONCLUSIVE if inconclusive else EXIT_PASS


def _stepper(args) -> int:
    if args.schedule:
        report = run_stepper(Schedule.load(args.schedule))
    else:
        cfg = _config(args)
        if cfg.threads > 3:
            raise UsageError("stepper mode runs at most 3 threads")
        programs = [cfg.program(t) for t in range(cfg.threads)]
        report = run_stepper(args.seed, programs=programs, prefill=cfg.prefill)
    ex = report.execution
    if args.out:
        report.schedule.save(args.out)
    print(f"{len(ex.trace)} steps, {ex.assists} assists, verdict {report.verdict.status}, hash {ex.final_hash[:16]}")
    if report.ok:
        return EXIT_PASS
    print(report.dump(), file=sys.stderr)
    if report.verdict.status == INCONCLUSIVE and not ex.violations and not ex.timed_out:
        return EXIT_INCONCLUSIVE
    return EXIT_VIOLATION


def _bench(args) -> int:
    counts = ()
    if args.bench_threads:
        try:
            counts = tuple(int(x) for x in args.bench_threads.split(","))
        except ValueError:
            raise UsageError(f"bad --bench-threads {args.bench_threads!r}") from None
    report = run_bench(_config(args), counts)
    _write_json(args.out, report)
    return EXIT_PASS


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return {"stress": _stress, "lincheck": _lincheck, "stepper": _stepper, "bench": _bench}[args.mode](args)
    except (ConfigError, UsageError, ScheduleError, OSError, ValueError) as exc:
        print(f"versiontree-harness: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
