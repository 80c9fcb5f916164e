"""Acceptance suite: every behavioral criterion at its stated tolerance.

Each test prints one `[acceptance] <criterion>: PASS|FAIL (<evidence>)` line.
Counting criteria are exact (no tolerances); latency is a sanity bound only,
since absolute numbers are hardware-specific.

Run with `pytest tests/test_acceptance.py -s` to see the lines as they pass.
"""

from __future__ import annotations

import concurrent.futures
import json
import random
import struct
import threading
import time

import pytest

from actiongov.artifacts import ApprovalWitness, generate_keypair
from actiongov.canonical import IntentProposal, canonicalize
from actiongov.config import (
    default_normalization,
    demo_policy_program,
    demo_state_entries,
    tightened_program,
)
from actiongov.encoding import digest_of
from actiongov.governor import Governor, GovernorMode
from actiongov.harness import (
    GeneratorParams,
    InstrumentedExecutor,
    generate_workload,
    run_baseline,
    run_bench,
    run_bypass_matrix,
)
from actiongov.harness.workload import FAMILIES, _variant
from actiongov.ledger import LedgerStore
from actiongov.policy import Outcome, PolicyProgram, evaluate
from actiongov.replay import ReplayEngine, ReplayQuery

CFG = default_normalization()
SEED = 20_260_808


def _report(name: str, ok: bool, detail: str) -> None:
    print(f"[acceptance] {name}: {'PASS' if ok else 'FAIL'} ({detail})", flush=True)
    assert ok, f"{name}: {detail}"


def _fresh_governor(tmp_path, approver_keys, name: str, defer_timeout: float = 600.0) -> Governor:
    signing_key, _ = generate_keypair()
    from actiongov.artifacts import ApproverRegistry

    registry = ApproverRegistry()
    for approver, (_, pub) in approver_keys.items():
        registry.register(approver, pub)
    governor = Governor(
        LedgerStore(tmp_path / name), signing_key, CFG,
        approvers=registry, default_defer_timeout=defer_timeout,
    )
    governor.register_tenant("acme", demo_policy_program(), demo_state_entries())
    return governor


EMAIL_PAYLOAD = {"tool": "email.send", "to": "a@x.com", "subj": "hi", "body": "ok"}


def test_determinism_10k_variants_one_digest_one_decision(tmp_path, approver_keys):
    """10,000 syntactic variants of one semantic intent -> 1 digest, 1 decision."""
    governor = _fresh_governor(tmp_path, approver_keys, "determinism")
    email_family = next(f for f in FAMILIES if f.name == "email")
    rng = random.Random(SEED)
    started = time.monotonic()
    digests: set[str] = set()
    decisions: set[tuple] = set()
    for j in range(10_000):
        payload = _variant(dict(EMAIL_PAYLOAD), email_family, j, rng)
        proposal = IntentProposal("acme", "agent:mailer", payload, origin=f"o{j % 5}")
        outcome = governor.commit(proposal, GovernorMode.DEFERRED)
        digests.add(outcome.h.hex)
        decisions.add(
            (outcome.decision.outcome.value, outcome.decision.matched_rule,
             outcome.decision.explanation)
        )
    elapsed = time.monotonic() - started
    governor.close()
    ok = len(digests) == 1 and len(decisions) == 1 and elapsed < 60.0
    _report(
        "determinism",
        ok,
        f"N=10000 -> {len(digests)} hash(es), {len(decisions)} decision(s), {elapsed:.1f}s",
    )


def test_fail_closed_200_of_200(tmp_path, approver_keys):
    """200 timeout/kill-switch commits -> 200/200 DENY or DEFER, 0 PERMIT."""
    governor = _fresh_governor(tmp_path, approver_keys, "failclosed")
    started = time.monotonic()
    outcomes = []
    governor.kill_switch(True)
    for i in range(100):
        outcomes.append(governor.commit(IntentProposal(
            "acme", "agent:web",
            {"tool": "http.request", "url": f"https://x/kill/{i}"})))
    governor.kill_switch(False)
    for i in range(100):
        outcomes.append(governor.commit(IntentProposal(
            "acme", "agent:mailer",
            {"tool": "email.send", "to": f"t{i}@x.com", "subj": "s", "body": "b"}),
            GovernorMode.INLINE, deadline=0.0))
    elapsed = time.monotonic() - started
    governor.close()
    denied = sum(1 for o in outcomes if o.decision.outcome in (Outcome.DENY, Outcome.DEFER))
    permits = sum(1 for o in outcomes if o.decision.outcome is Outcome.PERMIT)
    ok = denied == 200 and permits == 0 and elapsed < 30.0
    _report("fail_closed", ok, f"{denied}/200 deny-or-defer, {permits} permits, {elapsed:.1f}s")


def test_exactly_once_dedup_100k_16_workers(tmp_path, approver_keys):
    """100,000 duplicate submissions, 16 workers -> one decision, 0 double-execs."""
    governor = _fresh_governor(tmp_path, approver_keys, "dedup")
    executor = InstrumentedExecutor(governor, "acme")
    proposal = IntentProposal(
        "acme", "agent:web",
        {"tool": "http.request", "url": "https://api.example.com/dedup", "method": "GET"},
    )
    action, _ = canonicalize(proposal, CFG)
    record_hashes: set[bytes] = set()
    outcomes_seen: set[str] = set()
    seen_lock = threading.Lock()

    def submit(_: int) -> None:
        out = governor.commit(proposal, GovernorMode.INLINE)
        with seen_lock:
            record_hashes.add(out.record.record_hash)
            outcomes_seen.add(out.decision.outcome.value)
        if out.decision.outcome is Outcome.PERMIT and out.artifact is not None:
            executor.execute(action, out.artifact)

    started = time.monotonic()
    with concurrent.futures.ThreadPoolExecutor(max_workers=16) as pool:
        list(pool.map(submit, range(100_000), chunksize=512))
    elapsed = time.monotonic() - started
    counters = executor.snapshot()
    governor.close()
    double_execs = counters.executions - 1
    ok = (
        double_execs == 0
        and counters.executions == 1
        and len(record_hashes) == 1
        and outcomes_seen == {"PERMIT"}
        and governor.store.count("acme") == 1
        and elapsed < 300.0
    )
    _report(
        "exactly_once_dedup",
        ok,
        f"100000 submissions, {counters.executions} execution(s), "
        f"{double_execs} double-execs, {len(record_hashes)} record(s), {elapsed:.1f}s",
    )


def test_waiter_consistency_500_waiters(tmp_path, approver_keys):
    """500 concurrent waiters, one approval -> 500/500 identical artifacts."""
    governor = _fresh_governor(tmp_path, approver_keys, "waiters")
    proposal = IntentProposal("acme", "agent:mailer", EMAIL_PAYLOAD)
    seed = governor.commit(proposal, GovernorMode.DEFERRED)
    results: list = []
    results_lock = threading.Lock()
    started = time.monotonic()

    def wait_for_resolution() -> None:
        out = governor.commit(proposal, GovernorMode.INLINE, deadline=25.0)
        with results_lock:
            results.append(out)

    threads = [threading.Thread(target=wait_for_resolution) for _ in range(500)]
    for t in threads:
        t.start()
    deadline = time.monotonic() + 10.0
    while time.monotonic() < deadline:
        status = governor.status_for_hash("acme", seed.h.hex)
        if status is not None and status.waiters >= 500:
            break
        time.sleep(0.01)
    key, _ = approver_keys["alice"]
    resolution = governor.resolve_approval(
        "acme", ApprovalWitness.create(key, seed.h.hex, "alice", "approve"))
    for t in threads:
        t.join(timeout=30)
    elapsed = time.monotonic() - started
    governor.close()
    tokens = {out.artifact.token() for out in results if out.artifact is not None}
    outcomes = {out.decision.outcome for out in results}
    records = {out.record.record_hash for out in results}
    ok = (
        len(results) == 500
        and outcomes == {Outcome.PERMIT}
        and tokens == {resolution.artifact.token()}
        and records == {resolution.record.record_hash}
        and elapsed < 30.0
    )
    _report(
        "waiter_consistency",
        ok,
        f"{len(results)}/500 waiters, {len(tokens)} distinct artifact(s), {elapsed:.1f}s",
    )


def test_bypass_matrix_all_zero(tmp_path, approver_keys):
    """direct 10k, alt-route 10k, cached replay 10k, stale policy 5k -> all 0."""
    governor = _fresh_governor(tmp_path, approver_keys, "bypass")
    volumes = {
        "direct-call": 10_000,
        "alternate-route": 10_000,
        "cached-token-replay": 10_000,
        "concurrent-duplicate": 10_000,
        "stale-policy": 5_000,
    }
    outcomes = run_bypass_matrix(governor, "acme", volumes=volumes, workers=16)
    governor.close()
    ok = all(o.successes == 0 for o in outcomes)
    detail = ", ".join(f"{o.attack_class}={o.successes}/{o.attempts}" for o in outcomes)
    _report("bypass_matrix", ok, detail)


def test_coverage_exact_arithmetic(tmp_path, approver_keys):
    """Coverage 1.0 without probes; exactly 1 - probes/attempts with them."""
    governor = _fresh_governor(tmp_path, approver_keys, "coverage")
    executor = InstrumentedExecutor(governor, "acme")
    for i in range(400):
        proposal = IntentProposal(
            "acme", "agent:events",
            {"tool": "queue.publish", "topic": "cov", "payload_size": i + 1})
        out = governor.commit(proposal)
        action, _ = canonicalize(proposal, CFG)
        executor.execute(action, out.artifact)
    clean = executor.snapshot()
    coverage_clean = clean.coverage()

    probes = 37
    probe_action, _ = canonicalize(
        IntentProposal("acme", "agent:events",
                       {"tool": "queue.publish", "topic": "cov", "payload_size": 1}), CFG)
    for _ in range(probes):
        executor.raw_execute(probe_action, route="probe")
    with_probes = executor.snapshot()
    governor.close()
    expected = 1.0 - probes / with_probes.attempts
    ok = (
        coverage_clean == 1.0
        and with_probes.executions_without_valid_artifact == probes
        and with_probes.coverage() == expected
    )
    _report(
        "coverage",
        ok,
        f"clean={coverage_clean}, probes={probes}/{with_probes.attempts}, "
        f"with_probes={with_probes.coverage():.6f} == {expected:.6f}",
    )


def test_ledger_tamper_evidence_1000_records(tmp_path):
    """Mutate / delete / reorder on a 1,000-record ledger -> exact broken seq."""
    store = LedgerStore(tmp_path / "tamper-src", fsync=False)
    outcomes = [Outcome.PERMIT, Outcome.DEFER, Outcome.DENY]
    for i in range(1_000):
        store.append("acme", digest_of(f"a{i}".encode()), "policies:v12",
                     digest_of(f"s{i}".encode()), outcomes[i % 3], 1_700_000_000 + i, i + 1)
    assert store.verify_chain("acme").ok
    rows = list(store.read_rows("acme"))

    def write_copy(name: str, tampered_rows: list[dict]) -> LedgerStore:
        copy = LedgerStore(tmp_path / name, fsync=False)
        path = copy.root / "acme" / "records.log"
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "wb") as fh:
            for row in tampered_rows:
                body = json.dumps(row, sort_keys=True, separators=(",", ":")).encode()
                fh.write(struct.pack(">I", len(body)))
                fh.write(body)
        return copy

    mutated = [dict(r) for r in rows]
    mutated[499]["decision"] = "PERMIT" if mutated[499]["decision"] != "PERMIT" else "DENY"
    report_mutate = write_copy("tamper-mutate", mutated).verify_chain("acme")

    deleted = [dict(r) for r in rows]
    del deleted[249]  # removes seq 250
    report_delete = write_copy("tamper-delete", deleted).verify_chain("acme")

    reordered = [dict(r) for r in rows]
    reordered[599], reordered[799] = reordered[799], reordered[599]
    report_reorder = write_copy("tamper-reorder", reordered).verify_chain("acme")

    ok = (
        (not report_mutate.ok and report_mutate.first_broken_seq == 500)
        and (not report_delete.ok and report_delete.first_broken_seq == 250)
        and (not report_reorder.ok and report_reorder.first_broken_seq == 600)
    )
    _report(
        "ledger_tamper_evidence",
        ok,
        f"mutate@{report_mutate.first_broken_seq} (exp 500), "
        f"delete@{report_delete.first_broken_seq} (exp 250), "
        f"reorder@{report_reorder.first_broken_seq} (exp 600)",
    )


def test_replay_trace_pattern(tmp_path, approver_keys):
    """Recorded DEFER -> DEFER as-recorded, DENY tightened, DENY mutated state."""
    governor = _fresh_governor(tmp_path, approver_keys, "trace")
    governor.commit(IntentProposal("acme", "agent:mailer", EMAIL_PAYLOAD), GovernorMode.DEFERRED)
    engine = ReplayEngine(governor.store)
    record = next(iter(governor.store.read_records("acme")))
    as_recorded = engine.replay_record(record, "acme")
    tightened = engine.replay_record(record, "acme", policy=tightened_program(demo_policy_program()))
    state = engine.resolve_state("acme", record.h_s.hex)
    mutated = engine.replay_record(
        record, "acme", state_entries=dict(state.entries, **{"budget:email": 0}))
    governor.close()
    ok = (
        record.decision is Outcome.DEFER
        and as_recorded.replayed == "DEFER"
        and tightened.replayed == "DENY"
        and mutated.replayed == "DENY"
    )
    _report(
        "replay_trace",
        ok,
        f"as-recorded={as_recorded.replayed}, tightened={tightened.replayed}, "
        f"state-mutated={mutated.replayed}",
    )


def test_replay_soundness_10k_run(tmp_path, approver_keys):
    """Every record of a 10,000-action run reproduces; flips match brute force."""
    governor = _fresh_governor(tmp_path, approver_keys, "soundness", defer_timeout=600.0)
    params = GeneratorParams(actions=10_000, mutations=1)
    approve_key, _ = approver_keys["alice"]
    approvals = 0
    started = time.monotonic()
    for item in generate_workload(params, SEED):
        out = governor.commit(item.base, GovernorMode.DEFERRED, deadline=0.0)
        if out.pending and approvals < 20:
            verdict = "approve" if approvals % 4 else "reject"
            governor.resolve_approval(
                "acme",
                ApprovalWitness.create(approve_key, out.h.hex, "alice", verdict))
            approvals += 1
    while governor.sweep_expired():
        pass
    commit_done = time.monotonic()

    engine = ReplayEngine(governor.store)
    as_recorded = engine.replay(ReplayQuery(tenant="acme"))
    sound = all(not r.flipped for r in as_recorded)

    tightened = tightened_program(demo_policy_program())
    report = engine.replay_range("acme", None, tightened)

    brute_force_flips = 0
    for record in governor.store.read_records("acme"):
        action = engine.resolve_action("acme", record.h_a.hex)
        state = engine.resolve_state("acme", record.h_s.hex)
        program = PolicyProgram(tightened.version_id, "acme", tightened.rules)
        decision = evaluate(action, program, state)
        if decision.outcome.value != record.decision.value:
            brute_force_flips += 1
    elapsed = time.monotonic() - started
    governor.close()
    ok = (
        len(as_recorded) >= 10_000
        and sound
        and report.flipped == brute_force_flips
        and report.flipped > 0
    )
    _report(
        "replay_soundness",
        ok,
        f"{len(as_recorded)} records sound={sound}, flips engine={report.flipped} "
        f"brute={brute_force_flips}, commit {commit_done - started:.0f}s "
        f"replay {elapsed - (commit_done - started):.0f}s",
    )


def test_baseline_violations(tmp_path):
    """logging-only leaks unrecorded executions; tool-local diverges; AAB neither."""
    logging_only = run_baseline("logging-only", 1_000, SEED, tmp_path / "b1")
    tool_local = run_baseline("tool-local", 1, SEED, tmp_path / "b2")
    protocol = run_baseline("protocol-embedded", 1, SEED, tmp_path / "b3")
    aab = run_baseline("aab", 1_000, SEED, tmp_path / "b4")
    ok = (
        logging_only.executions_without_record >= 1
        and logging_only.coverage < 1.0
        and tool_local.divergent_decisions
        and protocol.executed_despite_rejection >= 1
        and aab.executions_without_record == 0
        and not aab.divergent_decisions
        and aab.coverage == 1.0
    )
    _report(
        "baseline_violations",
        ok,
        f"logging-only unrecorded={logging_only.executions_without_record}, "
        f"tool-local divergent={tool_local.divergent_decisions}, "
        f"protocol bypassed={protocol.executed_despite_rejection}, "
        f"aab unrecorded={aab.executions_without_record} coverage={aab.coverage}",
    )


def test_latency_sanity_default_params(tmp_path):
    """p50 end-to-end under default parameters < 50 ms; per-phase report."""
    report = run_bench(GeneratorParams(), SEED, tmp_path / "bench")
    ok = (
        report.end_to_end.p50_ms < 50.0
        and report.unique_hashes == 1
        and report.failclosed_denied_or_deferred == report.failclosed_injected
        and report.coverage == 1.0
    )
    _report(
        "latency_sanity",
        ok,
        f"e2e p50={report.end_to_end.p50_ms:.3f}ms p95={report.end_to_end.p95_ms:.3f}ms | "
        f"canon {report.canon.p50_ms:.3f}/{report.canon.p95_ms:.3f} | "
        f"eval {report.eval.p50_ms:.3f}/{report.eval.p95_ms:.3f} | "
        f"record {report.record.p50_ms:.3f}/{report.record.p95_ms:.3f} | "
        f"throughput {report.throughput_per_min:.0f}/min",
    )
