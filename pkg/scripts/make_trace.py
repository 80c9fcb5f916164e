#!/usr/bin/env python3
"""Produce a mechanically verifiable end-to-end trace.

Shows: (1) intent variants collapsing to one canonical byte string and hash,
(2) the evaluation inputs (policy version, state digest) and decision,
(3) the hash-chained decision record, (4) artifact-bound execution, and
(5) replay behavior under the original and counterfactual inputs.

Usage: python scripts/make_trace.py
"""

from __future__ import annotations

import json
import tempfile
from pathlib import Path

from actiongov.artifacts import ApprovalWitness, ApproverRegistry, generate_keypair
from actiongov.canonical import IntentProposal, canonicalize, encode
from actiongov.config import (
    default_normalization,
    demo_policy_program,
    demo_state_entries,
    tightened_program,
)
from actiongov.governor import Governor, GovernorMode
from actiongov.harness import InstrumentedExecutor
from actiongov.ledger import LedgerStore
from actiongov.replay import ReplayEngine


def main() -> None:
    cfg = default_normalization()
    signing_key, _ = generate_keypair()
    approver_key, approver_pub = generate_keypair()
    registry = ApproverRegistry()
    registry.register("alice", approver_pub)
    root = Path(tempfile.mkdtemp(prefix="trace-"))
    governor = Governor(LedgerStore(root), signing_key, cfg,
                        approvers=registry, default_defer_timeout=60.0)
    governor.register_tenant("acme", demo_policy_program(), demo_state_entries())

    print("(1) intent variants -> canonical bytes + h")
    print("-" * 60)
    variants = [
        {"tool": "email.send", "to": "a@x.com", "subj": "hi", "body": "ok"},
        {"body": "ok", "subj": "hi", "to": "a@x.com", "tool": "email.send"},
        {"tool": "email.send", "to": "a@x.com", "subj": "hi", "body": "ok ", "meta": {"x": None}},
    ]
    h = None
    for i, payload in enumerate(variants, 1):
        print(f"I{i}: {json.dumps(payload)}")
        action, h = canonicalize(IntentProposal("acme", "agent:mailer", payload), cfg)
    print(f"canonical bytes: {encode(action).decode()}")
    print(f"h = sha256(bytes) = {h.hex}")

    print("\n(2) evaluation inputs (policy version, state digest) -> decision")
    print("-" * 60)
    outcome = governor.commit(
        IntentProposal("acme", "agent:mailer", variants[0]), GovernorMode.DEFERRED)
    record = outcome.record
    print(f"v_P = {record.v_p}")
    print(f"h_S = {record.h_s.hex}")
    print(f"decision = {outcome.decision.outcome.value} ({outcome.decision.explanation})")

    print("\n(3) decision record hash-chained")
    print("-" * 60)
    print(json.dumps(record.row(), indent=2))

    print("\n(4) executor accepts only the artifact bound to h")
    print("-" * 60)
    executor = InstrumentedExecutor(governor, "acme")
    refused = executor.execute(action, None)
    print(f"attempt without artifact -> executed={refused}")
    resolution = governor.resolve_approval(
        "acme", ApprovalWitness.create(approver_key, h.hex, "alice", "approve"))
    print(f"approval by alice -> {resolution.decision.outcome.value}, artifact issued")
    executed = executor.execute(action, resolution.artifact)
    print(f"attempt with artifact -> executed={executed}")
    replayed = executor.execute(action, resolution.artifact)
    print(f"replayed artifact after consumption -> executed={replayed}")

    print("\n(5) replay behavior")
    print("-" * 60)
    engine = ReplayEngine(governor.store)
    as_recorded = engine.replay_record(record, "acme")
    print(f"same (A, P, S):   decision == {as_recorded.replayed}")
    tight = engine.replay_record(record, "acme", policy=tightened_program(demo_policy_program()))
    print(f"policy tightened: decision == {tight.replayed}")
    state = engine.resolve_state("acme", record.h_s.hex)
    mutated = engine.replay_record(record, "acme",
                                   state_entries=dict(state.entries, **{"budget:email": 0}))
    print(f"state changed:    decision == {mutated.replayed}")

    report = governor.store.verify_chain("acme")
    print(f"\nledger verification: ok={report.ok}, records={report.records_checked}")
    print(f"stores under {root}")
    governor.close()


if __name__ == "__main__":
    main()
