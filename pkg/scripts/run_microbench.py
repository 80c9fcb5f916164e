#!/usr/bin/env python3
"""Run the micro-benchmark and emit the JSON report plus a text summary.

Usage: python scripts/run_microbench.py [--n 10000] [--seed 1] [--out report.json]
"""

from __future__ import annotations

import argparse
import json
import tempfile
from pathlib import Path

from actiongov.harness import GeneratorParams, run_bench


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=10_000)
    parser.add_argument("--m", type=int, default=6)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--probes", type=int, default=0)
    parser.add_argument("--out", type=Path, default=None)
    parser.add_argument("--repetitions", type=int, default=1,
                        help="independent repetitions with derived seeds")
    args = parser.parse_args()

    for rep in range(args.repetitions):
        seed = args.seed + rep
        root = tempfile.mkdtemp(prefix=f"microbench-{seed}-")
        report = run_bench(GeneratorParams(actions=args.n, mutations=args.m),
                           seed, root, probes=args.probes)
        print(f"--- repetition {rep + 1}/{args.repetitions} (seed {seed}) ---")
        print(report.summary())
        if args.out:
            path = (args.out if args.repetitions == 1
                    else args.out.with_suffix(f".{rep}.json"))
            path.write_text(json.dumps(report.to_dict(), indent=2))
            print(f"wrote {path}")


if __name__ == "__main__":
    main()
