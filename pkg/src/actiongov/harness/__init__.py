"""Reproducible micro-evaluation harness.

Seeded adversarial workload generation, instrumented in-process executors,
the bypass-attack matrix, architectural baselines, and the latency /
determinism / fail-closed / coverage benchmark. Every number in a report is
computed from emitted logs and counters; nothing is hand-entered.
"""

from .workload import GeneratorParams, WorkloadItem, generate_workload, pad_program, pad_state
from .executors import ExecutorCounters, InstrumentedExecutor
from .attacks import AttackOutcome, run_bypass_matrix
from .bench import BenchReport, run_bench
from .baselines import BaselineResult, run_baseline

__all__ = [
    "AttackOutcome",
    "BaselineResult",
    "BenchReport",
    "ExecutorCounters",
    "GeneratorParams",
    "InstrumentedExecutor",
    "WorkloadItem",
    "generate_workload",
    "pad_program",
    "pad_state",
    "run_baseline",
    "run_bench",
    "run_bypass_matrix",
]
