"""Architectural baselines and the invariant each one violates.

Three alternatives to boundary enforcement, operationalized exactly:
``logging-only`` executes first and logs after (no decision records at all),
``tool-local`` embeds divergent allow/deny logic in each tool route, and
``protocol-embedded`` validates messages on one transport while an alternate
transport delivers unchecked. The ``aab`` row runs the same corpus through
the governor + checking executor and exhibits none of the violations.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any

from ..artifacts import generate_keypair
from ..canonical import IntentProposal, canonicalize
from ..config import default_normalization, demo_policy_program, demo_state_entries
from ..governor import Governor, GovernorMode
from ..ledger import LedgerStore
from ..policy import Outcome
from .executors import InstrumentedExecutor
from .workload import GeneratorParams, generate_workload

__all__ = ["BaselineResult", "run_baseline", "BASELINE_MODES"]

BASELINE_MODES = ("logging-only", "tool-local", "protocol-embedded", "aab")


@dataclass(frozen=True)
class BaselineResult:
    mode: str
    actions: int
    executions: int
    decision_records: int
    executions_without_record: int
    divergent_decisions: bool
    executed_despite_rejection: int
    coverage: float
    evidence: dict[str, Any]

    def guarantees_row(self) -> dict[str, Any]:
        return {
            "mode": self.mode,
            "non_bypassable": self.executions_without_record == 0
            and self.executed_despite_rejection == 0,
            "deterministic": not self.divergent_decisions,
            "replayable": self.decision_records > 0
            and self.executions_without_record == 0,
            "fail_closed": self.mode == "aab",
        }


def _fresh_governor(store_root: str | Path, tenant: str) -> Governor:
    signing_key, _ = generate_keypair()
    store = LedgerStore(Path(store_root) / "baseline", fsync=True)
    governor = Governor(store, signing_key, default_normalization(), default_defer_timeout=2.0)
    governor.register_tenant(tenant, demo_policy_program(tenant), demo_state_entries())
    return governor


def run_baseline(
    mode: str, n: int, seed: int, store_root: str | Path, tenant: str = "baseline"
) -> BaselineResult:
    """Run one baseline mode over a seeded corpus and measure its violations."""
    if mode not in BASELINE_MODES:
        raise ValueError(f"unknown baseline mode {mode!r}")
    normalization = default_normalization()
    params = GeneratorParams(actions=n, mutations=1)
    items = list(generate_workload(params, seed, tenant=tenant))
    governor = _fresh_governor(store_root, tenant)
    executor = InstrumentedExecutor(governor, tenant)
    try:
        if mode == "logging-only":
            # Execute everything, log effects afterwards; never consult policy.
            effect_log = []
            for item in items:
                action, h = canonicalize(item.base, normalization)
                executor.raw_execute(action, route="logging-only")
                effect_log.append(h.hex)
            records = governor.store.count(tenant)
            counters = executor.snapshot()
            return BaselineResult(
                mode=mode,
                actions=len(items),
                executions=counters.executions,
                decision_records=records,
                executions_without_record=counters.executions - records,
                divergent_decisions=False,
                executed_despite_rejection=0,
                coverage=counters.coverage(),
                evidence={"effect_log_len": len(effect_log)},
            )

        if mode == "tool-local":
            # Two tool routes embed their own conflicting guards; the same
            # canonical action gets two different answers.
            proposal = IntentProposal(
                tenant, "agent:billing",
                {"tool": "refund", "customer": "cust-7", "amount": 500, "currency": "USD"},
            )
            action, h = canonicalize(proposal, normalization)

            def route_a(a) -> bool:  # embedded guard: deny big refunds
                amount = a.get("parameters.amount") or 0
                if amount > 100:
                    return False
                executor.raw_execute(a, route="tool-a")
                return True

            def route_b(a) -> bool:  # no guard at all
                executor.raw_execute(a, route="tool-b")
                return True

            decision_a = route_a(action)
            decision_b = route_b(action)
            counters = executor.snapshot()
            return BaselineResult(
                mode=mode,
                actions=1,
                executions=counters.executions,
                decision_records=governor.store.count(tenant),
                executions_without_record=counters.executions,
                divergent_decisions=decision_a != decision_b,
                executed_despite_rejection=0,
                coverage=counters.coverage(),
                evidence={
                    "h_a": h.hex,
                    "route_a_executed": decision_a,
                    "route_b_executed": decision_b,
                },
            )

        if mode == "protocol-embedded":
            # Transport A validates and rejects the message; transport B is an
            # alternate route with no check, so the effect happens anyway.
            proposal = IntentProposal(
                tenant, "agent:billing",
                {"tool": "refund", "customer": "cust-9", "amount": 900, "currency": "USD"},
            )
            action, h = canonicalize(proposal, normalization)

            def transport_a(payload) -> bool:
                # message-level schema check embedded in the protocol handler
                return payload.get("tool") != "refund"

            rejected_by_a = not transport_a(dict(proposal.raw_payload))
            executed_after_rejection = 0
            if rejected_by_a:
                executor.raw_execute(action, route="transport-b")
                executed_after_rejection = 1
            counters = executor.snapshot()
            return BaselineResult(
                mode=mode,
                actions=1,
                executions=counters.executions,
                decision_records=governor.store.count(tenant),
                executions_without_record=counters.executions,
                divergent_decisions=False,
                executed_despite_rejection=executed_after_rejection,
                coverage=counters.coverage(),
                evidence={"h_a": h.hex, "rejected_by_transport_a": rejected_by_a},
            )

        # aab: full boundary on the same corpus, no raw paths.
        ledger_hashes: set[str] = set()
        for item in items:
            out = governor.commit(item.base, GovernorMode.DEFERRED)
            if out.decision.outcome is Outcome.PERMIT and out.artifact is not None:
                action, _ = canonicalize(item.base, normalization)
                executor.execute(action, out.artifact)
        for record in governor.store.read_records(tenant):
            ledger_hashes.add(record.h_a.hex)
        counters = executor.snapshot()
        executed_hashes = {e["h_a"] for e in executor.execution_log}
        return BaselineResult(
            mode=mode,
            actions=len(items),
            executions=counters.executions,
            decision_records=governor.store.count(tenant),
            executions_without_record=len(executed_hashes - ledger_hashes),
            divergent_decisions=False,
            executed_despite_rejection=0,
            coverage=counters.coverage(),
            evidence={
                "executed_with_artifact": counters.executions,
                "all_executions_recorded": executed_hashes <= ledger_hashes,
            },
        )
    finally:
        governor.close()
