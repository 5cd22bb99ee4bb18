"""Stress runs and linearizability checking.

run_stress drives real threads through the public API and records every
invocation and response.  check_linearizable then searches for a sequential
order, consistent with real time, that a plain sorted set would reproduce.
"""

import io

from versiontree.harness import WorkloadConfig, check_linearizable, run_stress
from versiontree.harness.history import dump_history

cfg = WorkloadConfig(threads=4, ops_per_thread=10, key_space=(0, 7), seed=3)
# jitter yields the interpreter at random shared accesses for more overlap
res = run_stress(cfg, jitter=0.3)
print(res.completed, "ops;", dict(res.op_counts), ";", res.assists, "helps")

verdict = check_linearizable(res.history)
print(verdict.status, "after exploring", verdict.states, "states")

# Histories are JSON lines, one event each.
buf = io.StringIO()
dump_history(res.history[:4], buf)
print(buf.getvalue())

# A broken history: contains(1) answers True before anyone added 1.
from versiontree.harness.history import Recorder

rec = Recorder()
rec.invoke(0, "contains", (1,))
rec.respond(0, "contains", (1,), True)
rec.invoke(1, "add", (1,))
rec.respond(1, "add", (1,), True)
bad = check_linearizable(rec.events)
print(bad.status, "- shortest failing prefix has", len(bad.violating_prefix), "events")
