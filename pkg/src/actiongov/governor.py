"""The action authorization boundary automaton.

Drives every proposal through canonicalize -> evaluate -> record -> (artifact)
with exactly-once semantics per canonical hash: a status map keyed by
(tenant, policy version, state epoch, h) is the single compare-and-swap point,
so concurrent duplicates collapse onto one decision, one record, and one
artifact. Deferred decisions suspend callers on the entry until an approval
witness, a rejection, or a timeout resolves them; all waiters observe the
identical finalized outcome.

Fail-closed throughout: kill switch, missing policy, storage failure,
evaluation exceptions, and approval timeouts all resolve to DENY (recorded
when a ledger stream exists), never to implicit execution.
"""

from __future__ import annotations

import enum
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Mapping

from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey

from .artifacts import (
    ApprovalWitness,
    ApproverRegistry,
    ArtifactService,
    ExecutionArtifact,
)
from .canonical import CanonicalAction, IntentProposal, NormalizationConfig, canonicalize, encode
from .encoding import CanonicalDigest, encode_map
from .errors import NoPermitDecision, StorageFailure, UnknownHash, UnregisteredTenant
from .ledger import DecisionRecord, LedgerStore
from .policy import (
    KILL_SWITCH_KEY,
    POLICY_AVAILABLE_KEY,
    Decision,
    Outcome,
    PolicyProgram,
    Rule,
    StateSnapshot,
    evaluate,
    state_digest,
    witness_entry_key,
)

__all__ = [
    "GovernorMode",
    "Phase",
    "ConsumeResult",
    "ActionStatus",
    "CommitOutcome",
    "Governor",
]


class GovernorMode(str, enum.Enum):
    INLINE = "inline"
    DEFERRED = "deferred"
    SHADOW = "shadow"


class Phase(str, enum.Enum):
    PENDING = "PENDING"
    FINAL = "FINAL"


class ConsumeResult(str, enum.Enum):
    FIRST_CONSUMER = "FirstConsumer"
    ALREADY_CONSUMED = "AlreadyConsumed"


@dataclass
class ActionStatus:
    """Mutable per-(scope, hash) entry behind the dedup compare-and-swap."""

    h_hex: str
    tenant: str
    scope: tuple[str, str, int]  # (namespace, policy version, state epoch)
    action: CanonicalAction
    mode: GovernorMode
    created_at: float
    phase: Phase = Phase.PENDING
    deferred: bool = False
    defer_deadline: float | None = None
    defer_record: DecisionRecord | None = None
    defer_decision: Decision | None = None
    approval_key: str = ""
    matched_rule: Rule | None = None
    final_decision: Decision | None = None
    record: DecisionRecord | None = None
    artifact: ExecutionArtifact | None = None
    consumed: bool = False
    waiters: int = 0
    # decided fires once a first record exists; finalized once phase is FINAL
    decided: threading.Event = field(default_factory=threading.Event)
    finalized: threading.Event = field(default_factory=threading.Event)


@dataclass(frozen=True)
class CommitOutcome:
    """What a commit caller gets back; artifact present implies PERMIT."""

    decision: Decision
    record: DecisionRecord | None
    artifact: ExecutionArtifact | None
    deduplicated: bool
    h: CanonicalDigest | None
    tenant: str
    pending: bool = False


@dataclass
class _TenantRuntime:
    tenant_id: str
    programs: dict[str, PolicyProgram]
    active_version: str
    state: StateSnapshot
    epoch: int = 0
    logical_clock: int = 0
    lock: threading.RLock = field(default_factory=threading.RLock)
    status: dict[tuple[tuple[str, str, int], str], ActionStatus] = field(default_factory=dict)
    by_hash: dict[str, ActionStatus] = field(default_factory=dict)
    pending: dict[str, ActionStatus] = field(default_factory=dict)


class Governor:
    """Single-node authorization control plane over per-tenant runtimes."""

    def __init__(
        self,
        store: LedgerStore,
        signing_key: Ed25519PrivateKey,
        normalization: NormalizationConfig,
        approvers: ApproverRegistry | None = None,
        artifact_ttl: float = 300.0,
        default_defer_timeout: float = 300.0,
        sweep_interval: float = 0.025,
        start_sweeper: bool = True,
    ) -> None:
        self.store = store
        self.normalization = normalization
        self.approvers = approvers or ApproverRegistry()
        self.artifacts = ArtifactService(signing_key, store, default_ttl=artifact_ttl)
        self.default_defer_timeout = default_defer_timeout
        self._tenants: dict[str, _TenantRuntime] = {}
        self._tenants_lock = threading.Lock()
        self._kill = False
        self._closed = False
        self._sweep_interval = sweep_interval
        self._sweeper: threading.Thread | None = None
        if start_sweeper:
            self._sweeper = threading.Thread(target=self._sweep_loop, daemon=True)
            self._sweeper.start()

    # -- lifecycle ----------------------------------------------------------

    def close(self) -> None:
        self._closed = True
        if self._sweeper is not None:
            self._sweeper.join(timeout=1.0)

    def __enter__(self) -> "Governor":
        return self

    def __exit__(self, *exc: Any) -> None:
        self.close()

    # -- tenant administration ----------------------------------------------

    def register_tenant(
        self,
        tenant_id: str,
        program: PolicyProgram,
        initial_entries: Mapping[str, Any] | None = None,
    ) -> None:
        entries = dict(initial_entries or {})
        if self._kill:
            entries[KILL_SWITCH_KEY] = True
        state = StateSnapshot(tenant_id=tenant_id, entries=entries, captured_at=time.time())
        runtime = _TenantRuntime(
            tenant_id=tenant_id,
            programs={program.version_id: program},
            active_version=program.version_id,
            state=state,
        )
        with self._tenants_lock:
            self._tenants[tenant_id] = runtime
        self.store.put_policy_source(tenant_id, program.version_id, program.to_dict())

    def publish_program(self, tenant_id: str, program: PolicyProgram, activate: bool = False) -> None:
        runtime = self._runtime(tenant_id)
        with runtime.lock:
            runtime.programs[program.version_id] = program
            if activate:
                runtime.active_version = program.version_id
                runtime.epoch += 1
        self.store.put_policy_source(tenant_id, program.version_id, program.to_dict())

    def activate_version(self, tenant_id: str, version_id: str) -> None:
        runtime = self._runtime(tenant_id)
        with runtime.lock:
            if version_id not in runtime.programs:
                raise UnknownHash(f"policy version {version_id!r} not published")
            runtime.active_version = version_id
            runtime.epoch += 1

    def active_version(self, tenant_id: str) -> str:
        return self._runtime(tenant_id).active_version

    def program(self, tenant_id: str, version_id: str | None = None) -> PolicyProgram:
        runtime = self._runtime(tenant_id)
        with runtime.lock:
            return runtime.programs[version_id or runtime.active_version]

    def tenants(self) -> list[str]:
        with self._tenants_lock:
            return sorted(self._tenants)

    def current_state(self, tenant_id: str) -> StateSnapshot:
        return self._runtime(tenant_id).state

    def update_state_entries(self, tenant_id: str, updates: Mapping[str, Any]) -> None:
        """Administrative state change; opens a new dedup scope."""
        runtime = self._runtime(tenant_id)
        with runtime.lock:
            runtime.state = runtime.state.with_entries(dict(updates), time.time())
            runtime.epoch += 1

    def drop_state_entry(self, tenant_id: str, key: str) -> None:
        runtime = self._runtime(tenant_id)
        with runtime.lock:
            runtime.state = runtime.state.without(key, time.time())
            runtime.epoch += 1

    def set_policy_available(self, tenant_id: str, available: bool) -> None:
        """Simulated policy-store outage; recorded as a state signal so the
        resulting fail-closed denials replay exactly."""
        runtime = self._runtime(tenant_id)
        with runtime.lock:
            runtime.state = runtime.state.with_entries(
                {POLICY_AVAILABLE_KEY: available}, time.time()
            )
            runtime.epoch += 1

    def kill_switch(self, enabled: bool) -> bool:
        """Atomic global stop: while engaged every commit resolves DENY.

        The flag is merged into every tenant's state snapshot, making it one
        of the evaluation inputs: in-flight evaluations observe either the
        pre- or post-toggle snapshot, and recorded denials replay exactly.
        """
        self._kill = enabled
        with self._tenants_lock:
            runtimes = list(self._tenants.values())
        for runtime in runtimes:
            with runtime.lock:
                runtime.state = runtime.state.with_entries(
                    {KILL_SWITCH_KEY: enabled}, time.time()
                )
                runtime.epoch += 1
        return self._kill

    def kill_switch_engaged(self) -> bool:
        return self._kill

    def _runtime(self, tenant_id: str) -> _TenantRuntime:
        with self._tenants_lock:
            runtime = self._tenants.get(tenant_id)
        if runtime is None:
            raise UnregisteredTenant(f"tenant {tenant_id!r} is not registered")
        return runtime

    def _has_tenant(self, tenant_id: str) -> bool:
        with self._tenants_lock:
            return tenant_id in self._tenants

    # -- the commit path -------------------------------------------------------

    def commit(
        self,
        proposal: IntentProposal,
        mode: GovernorMode = GovernorMode.INLINE,
        deadline: float | None = None,
    ) -> CommitOutcome:
        """Authorize one proposal; exactly one decision per (scope, hash).

        Exactly one of three things happens: this call performs the fresh
        evaluation, or it joins an in-flight one, or it observes an existing
        final entry. Deferred decisions block inline callers (until approval
        or deadline) and hand deferred-mode callers a pending outcome.
        """
        action, h = canonicalize(proposal, self.normalization)
        tenant_id = proposal.tenant_id

        if not self._has_tenant(tenant_id):
            return CommitOutcome(
                decision=Decision(Outcome.DENY, "default", "fail-closed: unregistered tenant"),
                record=None, artifact=None, deduplicated=False, h=h, tenant=tenant_id,
            )

        runtime = self._runtime(tenant_id)
        start = time.time()
        wait_budget = self.default_defer_timeout if deadline is None else deadline

        with runtime.lock:
            namespace = "shadow" if mode is GovernorMode.SHADOW else "live"
            scope = (namespace, runtime.active_version, runtime.epoch)
            key = (scope, h.hex)
            entry = runtime.status.get(key)
            if entry is None:
                entry = ActionStatus(
                    h_hex=h.hex, tenant=tenant_id, scope=scope, action=action,
                    mode=mode, created_at=start,
                )
                runtime.status[key] = entry
                runtime.by_hash[h.hex] = entry
                self._decide(runtime, entry, action, h, mode, wait_budget)
                owner = True
            else:
                owner = False

        if owner:
            if entry.phase is Phase.FINAL:
                return self._outcome(entry, deduplicated=False)
            # Deferred: inline callers wait, deferred-mode callers get a handle.
            if mode is GovernorMode.DEFERRED:
                return self._pending_outcome(entry, deduplicated=False)
            self._await_final(runtime, entry, start, wait_budget)
            return self._outcome(entry, deduplicated=False)

        # Duplicate path: someone else owns the evaluation.
        if mode is GovernorMode.DEFERRED:
            entry.decided.wait(timeout=max(wait_budget, 0.001))
            if entry.phase is Phase.FINAL:
                return self._outcome(entry, deduplicated=True)
            return self._pending_outcome(entry, deduplicated=True)
        with runtime.lock:
            entry.waiters += 1
        self._await_final(runtime, entry, start, wait_budget)
        return self._outcome(entry, deduplicated=True)

    def _decide(
        self,
        runtime: _TenantRuntime,
        entry: ActionStatus,
        action: CanonicalAction,
        h: CanonicalDigest,
        mode: GovernorMode,
        wait_budget: float,
    ) -> None:
        """Fresh evaluation under the tenant lock; never raises."""
        state = runtime.state
        program = runtime.programs.get(runtime.active_version)

        if program is None:  # defensive; activate_version validates versions
            decision = Decision(Outcome.DENY, "default", "fail-closed: policy unavailable")
        else:
            try:
                decision = evaluate(action, program, state)
            except Exception as exc:  # fail-closed on any evaluation fault
                decision = Decision(Outcome.DENY, "default", f"fail-closed: evaluation error: {exc}")

        record = self._append(runtime, h, action, state, decision)
        if record is None:
            decision = Decision(Outcome.DENY, decision.matched_rule, "fail-closed: storage failure")
            self._finalize(runtime, entry, decision, None, None)
            return

        if decision.outcome is Outcome.PERMIT:
            artifact = self._issue(runtime, entry, record, decision, mode)
            self._finalize(runtime, entry, decision, record, artifact)
        elif decision.outcome is Outcome.DENY:
            self._finalize(runtime, entry, decision, record, None)
        else:  # DEFER
            if mode is GovernorMode.SHADOW:
                self._finalize(runtime, entry, decision, record, None)
                return
            rule = program.rule_by_id(decision.matched_rule) if program else None
            entry.deferred = True
            entry.defer_record = record
            entry.defer_decision = decision
            entry.matched_rule = rule
            entry.approval_key = rule.approval_key if rule else ""
            entry.defer_deadline = time.time() + max(wait_budget, 0.0)
            runtime.pending[h.hex] = entry
            entry.decided.set()

    def _append(
        self,
        runtime: _TenantRuntime,
        h: CanonicalDigest,
        action: CanonicalAction,
        state: StateSnapshot,
        decision: Decision,
    ) -> DecisionRecord | None:
        """Persist the decision record and side blobs; None on storage failure."""
        h_s = state_digest(state)
        runtime.logical_clock += 1
        try:
            record = self.store.append(
                runtime.tenant_id, h, runtime.active_version, h_s,
                decision.outcome, int(time.time()), runtime.logical_clock,
            )
            self.store.put_action_bytes(runtime.tenant_id, h, encode(action))
            self.store.put_state_bytes(runtime.tenant_id, h_s, encode_map(dict(state.entries)))
        except StorageFailure:
            return None
        return record

    def _issue(
        self,
        runtime: _TenantRuntime,
        entry: ActionStatus,
        record: DecisionRecord,
        decision: Decision,
        mode: GovernorMode,
    ) -> ExecutionArtifact:
        program = runtime.programs.get(runtime.active_version)
        rule = program.rule_by_id(decision.matched_rule) if program else None
        entry.matched_rule = rule
        single_use = not (rule.idempotent if rule else False)
        return self.artifacts.issue(
            runtime.tenant_id, record,
            single_use=single_use, enforcing=mode is not GovernorMode.SHADOW,
        )

    def _finalize(
        self,
        runtime: _TenantRuntime,
        entry: ActionStatus,
        decision: Decision,
        record: DecisionRecord | None,
        artifact: ExecutionArtifact | None,
    ) -> None:
        entry.final_decision = decision
        entry.record = record
        entry.artifact = artifact
        entry.phase = Phase.FINAL
        runtime.pending.pop(entry.h_hex, None)
        entry.decided.set()
        entry.finalized.set()

    def _await_final(
        self, runtime: _TenantRuntime, entry: ActionStatus, start: float, wait_budget: float
    ) -> None:
        remaining = wait_budget - (time.time() - start)
        entry.finalized.wait(timeout=max(remaining, 0.001))
        if entry.phase is not Phase.FINAL:
            # This caller's patience ran out: fail the deferred entry closed so
            # every waiter observes one consistent DENY.
            self._finalize_timeout(runtime, entry)

    def _finalize_timeout(self, runtime: _TenantRuntime, entry: ActionStatus) -> None:
        """Resolve an expired deferral by merging a timeout marker into state
        and re-evaluating, so the recorded outcome replays from (A, P, S')."""
        with runtime.lock:
            if entry.phase is Phase.FINAL:
                return
            program = runtime.programs.get(runtime.active_version)
            marker = {"kind": "approval_timeout", "at": int(time.time())}
            keys = [entry.approval_key] if entry.approval_key else []
            decision = Decision(Outcome.DENY, "default", "fail-closed: approval timeout")
            for _ in range(3):  # follow approval-key renames across policy swaps
                for key in keys:
                    runtime.state = runtime.state.with_entries(
                        {witness_entry_key(key, entry.h_hex): marker}, time.time()
                    )
                    runtime.epoch += 1
                if program is None:
                    break
                try:
                    decision = evaluate(entry.action, program, runtime.state)
                except Exception as exc:
                    decision = Decision(
                        Outcome.DENY, "default", f"fail-closed: evaluation error: {exc}"
                    )
                    break
                if decision.outcome is not Outcome.DEFER:
                    break
                rule = program.rule_by_id(decision.matched_rule)
                if rule is None or not rule.approval_key:
                    break
                keys = [rule.approval_key]
            if decision.outcome is Outcome.DEFER:
                # Unreachable under a stable program; fail closed regardless.
                decision = Decision(Outcome.DENY, decision.matched_rule,
                                    "fail-closed: approval timeout")
            record = self._append(runtime, CanonicalDigest.from_hex(entry.h_hex),
                                  entry.action, runtime.state, decision)
            artifact = None
            if decision.outcome is Outcome.PERMIT and record is not None:
                artifact = self._issue(runtime, entry, record, decision, entry.mode)
            # The marker did its job: the resolution record's snapshot holds it
            # (that is what replays), so later snapshots need not carry it.
            for key in keys:
                runtime.state = runtime.state.without(
                    witness_entry_key(key, entry.h_hex), time.time()
                )
            self._finalize(runtime, entry, decision, record, artifact)

    def _outcome(self, entry: ActionStatus, deduplicated: bool) -> CommitOutcome:
        decision = entry.final_decision
        assert decision is not None
        return CommitOutcome(
            decision=decision, record=entry.record, artifact=entry.artifact,
            deduplicated=deduplicated, h=CanonicalDigest.from_hex(entry.h_hex),
            tenant=entry.tenant, pending=False,
        )

    def _pending_outcome(self, entry: ActionStatus, deduplicated: bool) -> CommitOutcome:
        decision = entry.defer_decision
        assert decision is not None
        return CommitOutcome(
            decision=decision, record=entry.defer_record, artifact=None,
            deduplicated=deduplicated, h=CanonicalDigest.from_hex(entry.h_hex),
            tenant=entry.tenant, pending=True,
        )

    # -- approvals ---------------------------------------------------------------

    def resolve_approval(self, tenant_id: str, witness: ApprovalWitness) -> CommitOutcome:
        """Merge a verified witness into state, re-evaluate, release waiters.

        Idempotent: a second resolution for the same hash returns the existing
        finalized outcome and appends nothing.
        """
        runtime = self._runtime(tenant_id)
        h_hex = witness.h_a
        entry = runtime.pending.get(h_hex) or runtime.by_hash.get(h_hex)
        if entry is None:
            # No live entry (e.g. a fresh process): resolve from the ledger.
            return self._resolve_from_ledger(runtime, witness)
        if not entry.deferred and entry.phase is not Phase.FINAL:
            raise UnknownHash(f"no deferred action for hash {h_hex}")
        if entry.phase is Phase.FINAL:
            return self._outcome(entry, deduplicated=True)

        self.approvers.verify(witness)

        with runtime.lock:
            if entry.phase is Phase.FINAL:
                return self._outcome(entry, deduplicated=True)
            entry_key = witness_entry_key(entry.approval_key, h_hex)
            runtime.state = runtime.state.with_entries(
                {entry_key: witness.to_entry()}, time.time()
            )
            runtime.epoch += 1
            program = runtime.programs.get(runtime.active_version)
            try:
                decision = evaluate(entry.action, program, runtime.state)
            except Exception as exc:
                decision = Decision(Outcome.DENY, "default", f"fail-closed: evaluation error: {exc}")
            record = self._append(
                runtime, CanonicalDigest.from_hex(h_hex), entry.action, runtime.state, decision
            )
            if record is None:
                decision = Decision(Outcome.DENY, decision.matched_rule, "fail-closed: storage failure")
                self._finalize(runtime, entry, decision, None, None)
                return self._outcome(entry, deduplicated=False)
            artifact = None
            if decision.outcome is Outcome.PERMIT:
                artifact = self._issue(runtime, entry, record, decision, entry.mode)
            self._finalize(runtime, entry, decision, record, artifact)
            return self._outcome(entry, deduplicated=False)

    def _resolve_from_ledger(self, runtime: _TenantRuntime, witness: ApprovalWitness) -> CommitOutcome:
        """Resolve a deferral recorded by an earlier process.

        The portable record is sufficient: the action is rebuilt from the
        content-addressed side store, the witness merged, and a resolution
        record appended, exactly as for a live entry.
        """
        from .canonical import action_from_fields
        from .encoding import decode_bytes

        h_hex = witness.h_a
        tenant_id = runtime.tenant_id
        latest = self.store.latest_for_hash(tenant_id, h_hex)
        if latest is None:
            raise UnknownHash(f"no deferred action for hash {h_hex}")
        if latest.decision is not Outcome.DEFER:
            return CommitOutcome(
                decision=Decision(latest.decision, "recorded", "resolved in a prior session"),
                record=latest, artifact=None, deduplicated=True,
                h=latest.h_a, tenant=tenant_id,
            )
        self.approvers.verify(witness)
        action = action_from_fields(decode_bytes(self.store.get_action_bytes(tenant_id, h_hex)))

        with runtime.lock:
            program = runtime.programs.get(runtime.active_version)
            current = evaluate(action, program, runtime.state) if program else None
            if current is None or current.outcome is not Outcome.DEFER:
                raise UnknownHash(f"hash {h_hex} no longer defers under the active policy")
            rule = program.rule_by_id(current.matched_rule)
            entry = ActionStatus(
                h_hex=h_hex, tenant=tenant_id,
                scope=("live", runtime.active_version, runtime.epoch),
                action=action, mode=GovernorMode.DEFERRED, created_at=time.time(),
                deferred=True, defer_record=latest, defer_decision=current,
                approval_key=rule.approval_key if rule else "",
                matched_rule=rule,
            )
            runtime.status[(entry.scope, h_hex)] = entry
            runtime.by_hash[h_hex] = entry
            entry_key = witness_entry_key(entry.approval_key, h_hex)
            runtime.state = runtime.state.with_entries(
                {entry_key: witness.to_entry()}, time.time()
            )
            runtime.epoch += 1
            decision = evaluate(action, program, runtime.state)
            record = self._append(runtime, CanonicalDigest.from_hex(h_hex), action,
                                  runtime.state, decision)
            artifact = None
            if record is not None and decision.outcome is Outcome.PERMIT:
                artifact = self._issue(runtime, entry, record, decision, entry.mode)
            self._finalize(runtime, entry, decision, record, artifact)
            return self._outcome(entry, deduplicated=False)

    def pending_approvals(self, tenant_id: str | None = None) -> list[dict[str, Any]]:
        """Live deferred entries awaiting a witness (for consoles and CLI)."""
        out: list[dict[str, Any]] = []
        with self._tenants_lock:
            runtimes = [
                r for t, r in self._tenants.items() if tenant_id is None or t == tenant_id
            ]
        for runtime in runtimes:
            with runtime.lock:
                entries = list(runtime.pending.values())
            for entry in entries:
                if entry.phase is Phase.FINAL:
                    continue
                action = entry.action
                out.append(
                    {
                        "hash": entry.h_hex,
                        "tenant": entry.tenant,
                        "operation": action.operation,
                        "resource": action.resource,
                        "blast_radius": action.blast_radius,
                        "parameters": dict(action.parameters),
                        "waiting_since": entry.created_at,
                        "waiters": entry.waiters,
                        "seq": entry.defer_record.seq if entry.defer_record else None,
                    }
                )
        out.sort(key=lambda item: (item["tenant"], item["waiting_since"]))
        return out

    # -- consumption (exactly-once execution marker) ------------------------------

    def consume(self, tenant_id: str, h_hex: str) -> ConsumeResult:
        """Atomic test-and-set of the monotonic Consumed(h) marker.

        Exactly one caller wins for a single-use action; policy-flagged
        idempotent actions accept every caller. Post-execution accounting
        (budgets, rate counters) applies on the first consumption only,
        strictly after PERMIT.
        """
        runtime = self._runtime(tenant_id)
        with runtime.lock:
            entry = runtime.by_hash.get(h_hex)
            if (
                entry is None
                or entry.phase is not Phase.FINAL
                or entry.final_decision is None
                or entry.final_decision.outcome is not Outcome.PERMIT
            ):
                raise NoPermitDecision(f"no finalized PERMIT for hash {h_hex}")
            rule = entry.matched_rule
            if rule is not None and rule.idempotent:
                return ConsumeResult.FIRST_CONSUMER
            if entry.consumed:
                return ConsumeResult.ALREADY_CONSUMED
            entry.consumed = True
            self._apply_consume_effects(runtime, entry.action, rule)
            return ConsumeResult.FIRST_CONSUMER

    def is_consumed(self, tenant_id: str, h_hex: str) -> bool:
        runtime = self._runtime(tenant_id)
        with runtime.lock:
            entry = runtime.by_hash.get(h_hex)
            return bool(entry and entry.consumed)

    def _apply_consume_effects(
        self, runtime: _TenantRuntime, action: CanonicalAction, rule: Rule | None
    ) -> None:
        updates: dict[str, Any] = {}
        counter_key = f"exec:{action.operation}"
        updates[counter_key] = runtime.state.entries.get(counter_key, 0) + 1
        for effect in (rule.consume_effects if rule else ()):
            key = effect["key"]
            value = effect.get("value", 1)
            if isinstance(value, Mapping) and "param" in value:
                value = action.get(value["param"])
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                continue
            current = runtime.state.entries.get(key, 0)
            if not isinstance(current, (int, float)) or isinstance(current, bool):
                continue
            op = effect.get("op", "add")
            updates[key] = current - value if op == "sub" else current + value
        # Accounting mutates state but does not open a new dedup scope: the
        # epoch tracks governance events (policy activation, kill switch,
        # witnesses, admin edits), otherwise every consume would re-admit the
        # hash it just executed.
        runtime.state = runtime.state.with_entries(updates, time.time())

    # -- status and timeouts -----------------------------------------------------

    def status_for_hash(self, tenant_id: str, h_hex: str) -> ActionStatus | None:
        runtime = self._runtime(tenant_id)
        with runtime.lock:
            return runtime.by_hash.get(h_hex)

    def _sweep_loop(self) -> None:
        while not self._closed:
            time.sleep(self._sweep_interval)
            try:
                self.sweep_expired()
            except Exception:  # pragma: no cover - sweeper must never die
                pass

    def sweep_expired(self) -> int:
        """Finalize deferred entries whose deadline has passed (DENY)."""
        now = time.time()
        swept = 0
        with self._tenants_lock:
            runtimes = list(self._tenants.values())
        for runtime in runtimes:
            with runtime.lock:
                expired = [
                    e for e in runtime.pending.values()
                    if e.phase is Phase.PENDING
                    and e.defer_deadline is not None
                    and e.defer_deadline <= now
                ]
            for entry in expired:
                self._finalize_timeout(runtime, entry)
                swept += 1
        return swept
