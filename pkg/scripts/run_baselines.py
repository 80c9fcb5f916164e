#!/usr/bin/env python3
"""Run the architectural baselines and print the guarantees matrix.

Usage: python scripts/run_baselines.py [--n 1000] [--seed 1]
"""

from __future__ import annotations

import argparse
import tempfile

from actiongov.harness import run_baseline
from actiongov.harness.baselines import BASELINE_MODES


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=1_000)
    parser.add_argument("--seed", type=int, default=1)
    args = parser.parse_args()

    header = f"{'mode':20s} {'non-bypassable':>14s} {'deterministic':>13s} {'replayable':>10s} {'fail-closed':>11s}"
    print(header)
    print("-" * len(header))
    for mode in BASELINE_MODES:
        result = run_baseline(mode, args.n, args.seed, tempfile.mkdtemp(prefix=f"baseline-{mode}-"))
        row = result.guarantees_row()
        mark = lambda b: "yes" if b else "NO"
        print(f"{mode:20s} {mark(row['non_bypassable']):>14s} {mark(row['deterministic']):>13s} "
              f"{mark(row['replayable']):>10s} {mark(row['fail_closed']):>11s}")
        if mode == "logging-only":
            print(f"{'':20s}   -> {result.executions_without_record} executions with no decision record")
        if mode == "tool-local":
            print(f"{'':20s}   -> one canonical action, two routes, divergent={result.divergent_decisions}")
        if mode == "protocol-embedded":
            print(f"{'':20s}   -> executed despite message rejection: {result.executed_despite_rejection}")


if __name__ == "__main__":
    main()
