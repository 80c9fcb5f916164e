"""Counterfactual replay over recorded decisions.

Replay resolves a record's (h_A, v_P, h_S) references from the side stores,
verifies that the stored bytes still hash to the recorded digests (integrity
failures are reported as tamper evidence), and re-runs the pure evaluation
under either the original or a counterfactual policy/state. It is strictly
analytical: no tool is invoked, nothing is appended to the ledger, and the
results are reports, not decisions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Iterator, Mapping, Sequence

from .canonical import CanonicalAction, action_from_fields
from .encoding import decode_bytes, digest_of
from .errors import IntegrityMismatch, NotFound, UnresolvableReference
from .ledger import DecisionRecord, LedgerStore
from .policy import Decision, PolicyProgram, StateSnapshot, evaluate

__all__ = ["ReplayQuery", "ReplayResult", "FlipReport", "ReplayEngine"]


@dataclass(frozen=True)
class ReplayQuery:
    """What to replay and under which counterfactual inputs.

    Exactly one selector: a hash, an inclusive seq range, or the whole tenant.
    ``policy`` is a published version id or an inline program; ``state`` is
    None for as-recorded (resolved via h_S) or an explicit entries map.
    """

    tenant: str
    h_a_hex: str | None = None
    seq_range: tuple[int, int] | None = None
    policy: str | PolicyProgram | None = None
    state_entries: Mapping[str, Any] | None = None


@dataclass(frozen=True)
class ReplayResult:
    seq: int
    h_a: str
    recorded: str
    replayed: str
    matched_rule: str
    explanation: str

    @property
    def flipped(self) -> bool:
        return self.recorded != self.replayed


@dataclass(frozen=True)
class FlipReport:
    total: int
    flipped: int
    flips: tuple[tuple[int, str, str], ...]
    results: tuple[ReplayResult, ...] = field(repr=False, default=())

    def to_dict(self) -> dict[str, Any]:
        return {
            "total": self.total,
            "flipped": self.flipped,
            "flips": [list(f) for f in self.flips],
        }

    def summary(self) -> str:
        lines = [f"replayed {self.total} records, {self.flipped} flipped"]
        for seq, old, new in self.flips:
            lines.append(f"  seq {seq}: {old} -> {new}")
        return "\n".join(lines)


class ReplayEngine:
    """Read-only re-evaluation over a ledger store's persisted history."""

    def __init__(self, store: LedgerStore) -> None:
        self.store = store

    # -- reference resolution -------------------------------------------------

    def resolve_action(self, tenant: str, h_a_hex: str) -> CanonicalAction:
        try:
            data = self.store.get_action_bytes(tenant, h_a_hex)
        except NotFound as exc:
            raise UnresolvableReference(f"no action bytes for {h_a_hex}") from exc
        if digest_of(data).hex != h_a_hex:
            raise IntegrityMismatch(f"action bytes for {h_a_hex} fail the digest check")
        return action_from_fields(decode_bytes(data))

    def resolve_state(self, tenant: str, h_s_hex: str) -> StateSnapshot:
        try:
            data = self.store.get_state_bytes(tenant, h_s_hex)
        except NotFound as exc:
            raise UnresolvableReference(f"no state bytes for {h_s_hex}") from exc
        if digest_of(data).hex != h_s_hex:
            raise IntegrityMismatch(f"state bytes for {h_s_hex} fail the digest check")
        return StateSnapshot(tenant_id=tenant, entries=decode_bytes(data))

    def resolve_policy(self, tenant: str, ref: str | PolicyProgram) -> PolicyProgram:
        if isinstance(ref, PolicyProgram):
            return ref
        try:
            source = self.store.get_policy_source(tenant, ref)
        except NotFound as exc:
            raise UnresolvableReference(f"no policy source for version {ref!r}") from exc
        return PolicyProgram.from_dict(source)

    # -- replay ---------------------------------------------------------------

    def _select(self, query: ReplayQuery) -> Iterator[DecisionRecord]:
        records = self.store.read_records(query.tenant)
        if query.h_a_hex is not None:
            for record in records:
                if record.h_a.hex == query.h_a_hex:
                    yield record
        elif query.seq_range is not None:
            lo, hi = query.seq_range
            for record in records:
                if lo <= record.seq <= hi:
                    yield record
        else:
            yield from records

    def replay_record(
        self,
        record: DecisionRecord,
        tenant: str,
        policy: str | PolicyProgram | None = None,
        state_entries: Mapping[str, Any] | None = None,
    ) -> ReplayResult:
        action = self.resolve_action(tenant, record.h_a.hex)
        program = self.resolve_policy(tenant, policy if policy is not None else record.v_p)
        if state_entries is None:
            state = self.resolve_state(tenant, record.h_s.hex)
        else:
            state = StateSnapshot(tenant_id=tenant, entries=dict(state_entries))
        if program.tenant_id != tenant:
            program = PolicyProgram(
                version_id=program.version_id, tenant_id=tenant, rules=program.rules
            )
        decision: Decision = evaluate(action, program, state)
        return ReplayResult(
            seq=record.seq,
            h_a=record.h_a.hex,
            recorded=record.decision.value,
            replayed=decision.outcome.value,
            matched_rule=decision.matched_rule,
            explanation=decision.explanation,
        )

    def replay(self, query: ReplayQuery) -> list[ReplayResult]:
        """Replay every selected record; pure, deterministic, append-free."""
        results = []
        for record in self._select(query):
            results.append(
                self.replay_record(record, query.tenant, query.policy, query.state_entries)
            )
        return results

    def replay_range(
        self,
        tenant: str,
        seq_range: tuple[int, int] | None,
        policy: str | PolicyProgram | None,
        state_entries: Mapping[str, Any] | None = None,
    ) -> FlipReport:
        """Per-record replay with flip enumeration against the recorded outcomes."""
        query = ReplayQuery(
            tenant=tenant, seq_range=seq_range, policy=policy, state_entries=state_entries
        )
        results = tuple(self.replay(query))
        flips = tuple(
            (r.seq, r.recorded, r.replayed) for r in results if r.flipped
        )
        return FlipReport(total=len(results), flipped=len(flips), flips=flips, results=results)

    def report_lines(self, results: Sequence[ReplayResult]) -> Iterator[str]:
        for r in results:
            yield json.dumps(
                {
                    "seq": r.seq,
                    "h_a": r.h_a,
                    "recorded": r.recorded,
                    "replayed": r.replayed,
                    "matched_rule": r.matched_rule,
                    "flipped": r.flipped,
                },
                sort_keys=True,
            )
