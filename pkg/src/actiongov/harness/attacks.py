"""Bypass-attack matrix against an artifact-checking executor.

Five attack classes: direct tool call, alternate SDK route, cached-token
replay, concurrent duplicate execution, and stale policy snapshot. Success
counts are exact (every attempt is counted, nothing is sampled); the evidence
field carries the reject histograms and ledger references a reviewer needs to
re-derive each row.
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
import secrets
from dataclasses import dataclass
from typing import Any, Mapping

from ..artifacts import generate_keypair
from ..canonical import IntentProposal, canonicalize
from ..governor import Governor, GovernorMode
from ..policy import Outcome, PolicyProgram
from .executors import InstrumentedExecutor

__all__ = ["AttackOutcome", "run_bypass_matrix", "DEFAULT_VOLUMES"]

DEFAULT_VOLUMES: Mapping[str, int] = {
    "direct-call": 10_000,
    "alternate-route": 10_000,
    "cached-token-replay": 10_000,
    "concurrent-duplicate": 100_000,
    "stale-policy": 5_000,
}


@dataclass(frozen=True)
class AttackOutcome:
    attack_class: str
    attempts: int
    successes: int
    evidence: Mapping[str, Any]

    def to_dict(self) -> dict[str, Any]:
        return {
            "attack_class": self.attack_class,
            "attempts": self.attempts,
            "successes": self.successes,
            "evidence": dict(self.evidence),
        }


def _proposal(tenant: str, n: int) -> IntentProposal:
    return IntentProposal(
        tenant, "agent:web",
        {"tool": "http.request", "url": f"https://api.example.com/attack/{n}", "method": "GET"},
    )


def _delta(before, after) -> dict[str, int]:
    rejects = {
        k: after.rejects.get(k, 0) - before.rejects.get(k, 0)
        for k in set(after.rejects) | set(before.rejects)
    }
    return {k: v for k, v in rejects.items() if v}


def run_bypass_matrix(
    governor: Governor,
    tenant: str,
    volumes: Mapping[str, int] | None = None,
    workers: int = 16,
) -> list[AttackOutcome]:
    """Execute every attack class at its configured volume; returns exact counts."""
    volumes = dict(DEFAULT_VOLUMES, **(volumes or {}))
    executor = InstrumentedExecutor(governor, tenant)
    outcomes: list[AttackOutcome] = []

    # -- direct tool call: skip the governor entirely, present no artifact.
    n = volumes["direct-call"]
    action, _ = _commit_action(governor, tenant, 1)
    before = executor.snapshot()
    for _ in range(n):
        executor.execute(action, None, route="direct")
    after = executor.snapshot()
    outcomes.append(
        AttackOutcome(
            "direct-call", n, after.executions - before.executions,
            {"rejects": _delta(before, after)},
        )
    )

    # -- alternate SDK route: same tool via another client path, forged artifact.
    n = volumes["alternate-route"]
    attacker_key, _ = generate_keypair()
    outcome = governor.commit(_proposal(tenant, 2), GovernorMode.INLINE)
    assert outcome.decision.outcome is Outcome.PERMIT and outcome.artifact is not None
    genuine = outcome.artifact
    forged = dataclasses.replace(genuine, nonce=secrets.token_bytes(16))
    forged = dataclasses.replace(forged, signature=attacker_key.sign(forged.sign_payload()))
    action2, _ = _action_of(governor, tenant, 2)
    before = executor.snapshot()
    for i in range(n):
        executor.execute(action2, forged if i % 2 else None, route="sdk-b")
    after = executor.snapshot()
    outcomes.append(
        AttackOutcome(
            "alternate-route", n, after.executions - before.executions,
            {"rejects": _delta(before, after)},
        )
    )

    # -- cached-token replay: a genuinely issued artifact presented with a
    #    different intent's hash.
    n = volumes["cached-token-replay"]
    victim = governor.commit(_proposal(tenant, 3), GovernorMode.INLINE)
    assert victim.artifact is not None
    other_action, _ = _action_of(governor, tenant, 4)
    before = executor.snapshot()
    for _ in range(n):
        executor.execute(other_action, victim.artifact, route="replay")
    after = executor.snapshot()
    outcomes.append(
        AttackOutcome(
            "cached-token-replay", n, after.executions - before.executions,
            {"rejects": _delta(before, after)},
        )
    )

    # -- concurrent duplicates: many workers, one intent, at most one effect.
    n = volumes["concurrent-duplicate"]
    proposal = _proposal(tenant, 5)
    action5, _ = _action_of(governor, tenant, 5)
    before = executor.snapshot()

    def _attempt(_: int) -> None:
        out = governor.commit(proposal, GovernorMode.INLINE)
        if out.decision.outcome is Outcome.PERMIT and out.artifact is not None:
            executor.execute(action5, out.artifact, route="dup")

    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        list(pool.map(_attempt, range(n)))
    after = executor.snapshot()
    executed = after.executions - before.executions
    outcomes.append(
        AttackOutcome(
            "concurrent-duplicate", n, max(executed - 1, 0),
            {
                "executions": executed,
                "rejects": _delta(before, after),
            },
        )
    )

    # -- stale policy snapshot: artifact bound to a superseded policy version.
    n = volumes["stale-policy"]
    stale = governor.commit(_proposal(tenant, 6), GovernorMode.INLINE)
    assert stale.artifact is not None
    program = governor.program(tenant)
    bumped = program.to_dict()
    bumped["version_id"] = program.version_id + "-next"
    governor.publish_program(tenant, PolicyProgram.from_dict(bumped), activate=True)
    action6, _ = _action_of(governor, tenant, 6)
    before = executor.snapshot()
    for _ in range(n):
        executor.execute(action6, stale.artifact, route="stale")
    after = executor.snapshot()
    outcomes.append(
        AttackOutcome(
            "stale-policy", n, after.executions - before.executions,
            {"rejects": _delta(before, after)},
        )
    )
    return outcomes


def _commit_action(governor: Governor, tenant: str, n: int):
    proposal = _proposal(tenant, n)
    outcome = governor.commit(proposal, GovernorMode.INLINE)
    action, _ = _action_of(governor, tenant, n)
    return action, outcome


def _action_of(governor: Governor, tenant: str, n: int):
    return canonicalize(_proposal(tenant, n), governor.normalization)
