"""Test harness: stress runs, history recording, linearizability checking,
a deterministic stepper and a benchmark."""

from .bench import REPORT_SCHEMA, run_bench, validate_report
from .history import HistoryEvent, Recorder, read_history, write_history
from .lincheck import INCONCLUSIVE, LINEARIZABLE, VIOLATION, Verdict, check_linearizable
from .stepper import (
    Execution,
    RandomChooser,
    ReplayChooser,
    Schedule,
    Stepper,
    StepperReport,
    explore,
    run_stepper,
)
from .stress import StressResult, run_stress
from .workload import ConfigError, WorkloadConfig

__all__ = [
    "ConfigError",
    "Execution",
    "HistoryEvent",
    "INCONCLUSIVE",
    "LINEARIZABLE",
    "REPORT_SCHEMA",
    "RandomChooser",
    "Recorder",
    "ReplayChooser",
    "Schedule",
    "Stepper",
    "StepperReport",
    "StressResult",
    "VIOLATION",
    "Verdict",
    "WorkloadConfig",
    "check_linearizable",
    "explore",
    "read_history",
    "run_bench",
    "run_stepper",
    "run_stress",
    "validate_report",
    "write_history",
]
