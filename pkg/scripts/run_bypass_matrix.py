#!/usr/bin/env python3
"""Run the five-class bypass-attack matrix at acceptance volumes.

Usage: python scripts/run_bypass_matrix.py [--workers 16] [--out matrix.json]
Exit status 0 iff every class records zero successful executions.
"""

from __future__ import annotations

import argparse
import json
import sys
import tempfile
from pathlib import Path

from actiongov.artifacts import generate_keypair
from actiongov.config import default_normalization, demo_policy_program, demo_state_entries
from actiongov.governor import Governor
from actiongov.harness import run_bypass_matrix
from actiongov.ledger import LedgerStore


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--workers", type=int, default=16)
    parser.add_argument("--duplicates", type=int, default=100_000)
    parser.add_argument("--out", type=Path, default=None)
    args = parser.parse_args()

    signing_key, _ = generate_keypair()
    root = tempfile.mkdtemp(prefix="bypass-")
    governor = Governor(LedgerStore(Path(root)), signing_key, default_normalization())
    governor.register_tenant("acme", demo_policy_program(), demo_state_entries())
    volumes = {
        "direct-call": 10_000,
        "alternate-route": 10_000,
        "cached-token-replay": 10_000,
        "concurrent-duplicate": args.duplicates,
        "stale-policy": 5_000,
    }
    try:
        outcomes = run_bypass_matrix(governor, "acme", volumes=volumes, workers=args.workers)
    finally:
        governor.close()

    for o in outcomes:
        print(f"{o.attack_class:22s} attempts={o.attempts:7d} successes={o.successes} "
              f"evidence={json.dumps(dict(o.evidence))}")
    if args.out:
        args.out.write_text(json.dumps([o.to_dict() for o in outcomes], indent=2))
        print(f"wrote {args.out}")
    return 0 if all(o.successes == 0 for o in outcomes) else 1


if __name__ == "__main__":
    sys.exit(main())
