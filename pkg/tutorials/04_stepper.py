"""The deterministic stepper.

Logical threads run one shared-memory access at a time, in an order picked
by a chooser.  A monitor checks the descriptor state machine, freezing and
child-CAS rules, version isolation and more at every step.  Any run can be
saved and replayed exactly.
"""

from versiontree.harness import Schedule, Stepper, explore, run_stepper
from versiontree.harness import scenarios

programs = [[("add", (1,)), ("remove", (2,))], [("range", (0, 5))], [("contains", (1,))]]
report = run_stepper(42, programs=programs, prefill=[2])
ex = report.execution
print(len(ex.trace), "steps;", report.verdict.status, "; violations:", ex.violations)
print("results per thread:", ex.results)

# Replays are exact: same steps, same history, same final tree.
again = run_stepper(Schedule.from_json(report.schedule.to_json()))
print("replay identical:", again.execution.final_hash == ex.final_hash)

# Exhaustive exploration (up to reordering of independent steps).
res = explore(Stepper([[("add", (1,))], [("contains", (1,))]]), on_execution=lambda e: e.linearizability().ok)
print(res.executions, "executions, complete:", res.complete, "outcomes:", res.outcomes)

# A scan meets an insert paused mid-flight.  Paused before its handshake, the
# insert is aborted by the scan and retried in the next phase; paused after
# it, the scan finishes the insert and reports the key.
for pause in ("execute/freeze-cas", "help/try-cas"):
    run = scenarios.paused_insert_scan(pause)
    print(f"insert paused after {pause}: scan saw {run.results[1][0]}")

# A thread that dies right after freezing a node does not block others.
crash = scenarios.crash_schedules(50)
print("crash schedules:", crash.runs, "stuck:", len(crash.bad))
