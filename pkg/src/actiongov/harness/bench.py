"""Latency, throughput, determinism, fail-closed, and coverage benchmark.

The decision path decomposes as canonicalize -> evaluate -> record; each phase
is timed around the same component calls the governor makes, after a discarded
warm-up batch. Absolute numbers are hardware-specific and reported as-is; the
behavioral sub-tests (unique-hash count, fail-closed tally, coverage
arithmetic) are exact.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ..artifacts import generate_keypair
from ..canonical import IntentProposal, canonicalize
from ..config import default_normalization, demo_policy_program, demo_state_entries
from ..governor import Governor, GovernorMode
from ..ledger import LedgerStore
from ..policy import Outcome, evaluate, state_digest
from .executors import InstrumentedExecutor
from .workload import GeneratorParams, generate_workload, pad_program, pad_state

__all__ = ["PhaseStats", "BenchReport", "run_bench"]


@dataclass(frozen=True)
class PhaseStats:
    p50_ms: float
    p95_ms: float

    @classmethod
    def from_ns(cls, samples_ns: list[int]) -> "PhaseStats":
        ordered = sorted(samples_ns)
        return cls(
            p50_ms=_quantile(ordered, 0.50) / 1e6,
            p95_ms=_quantile(ordered, 0.95) / 1e6,
        )


def _quantile(ordered: list[int], q: float) -> float:
    if not ordered:
        return 0.0
    idx = min(int(q * len(ordered)), len(ordered) - 1)
    return float(ordered[idx])


@dataclass(frozen=True)
class BenchReport:
    n: int
    seed: int
    canon: PhaseStats
    eval: PhaseStats
    record: PhaseStats
    end_to_end: PhaseStats
    throughput_per_min: float
    unique_hashes: int
    unique_decisions: int
    determinism_samples: int
    failclosed_injected: int
    failclosed_denied_or_deferred: int
    failclosed_permits: int
    coverage: float
    probes_injected: int
    params: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "seed": self.seed,
            "t_canon_ms": {"p50": self.canon.p50_ms, "p95": self.canon.p95_ms},
            "t_eval_ms": {"p50": self.eval.p50_ms, "p95": self.eval.p95_ms},
            "t_record_ms": {"p50": self.record.p50_ms, "p95": self.record.p95_ms},
            "end_to_end_ms": {"p50": self.end_to_end.p50_ms, "p95": self.end_to_end.p95_ms},
            "throughput_per_min": self.throughput_per_min,
            "unique_hashes": self.unique_hashes,
            "unique_decisions": self.unique_decisions,
            "determinism_samples": self.determinism_samples,
            "failclosed_injected": self.failclosed_injected,
            "failclosed_denied_or_deferred": self.failclosed_denied_or_deferred,
            "failclosed_permits": self.failclosed_permits,
            "coverage": self.coverage,
            "probes_injected": self.probes_injected,
            "params": dict(self.params),
        }

    def summary(self) -> str:
        d = self.to_dict()
        lines = [
            f"n: {self.n}  seed: {self.seed}",
            f"t_canon  p50/p95 ms: {self.canon.p50_ms:.3f} / {self.canon.p95_ms:.3f}",
            f"t_eval   p50/p95 ms: {self.eval.p50_ms:.3f} / {self.eval.p95_ms:.3f}",
            f"t_record p50/p95 ms: {self.record.p50_ms:.3f} / {self.record.p95_ms:.3f}",
            f"end_to_end p50/p95 ms: {self.end_to_end.p50_ms:.3f} / {self.end_to_end.p95_ms:.3f}",
            f"throughput: {self.throughput_per_min:.0f} actions/min",
            f"unique_hashes: {self.unique_hashes} (of {self.determinism_samples})",
            f"unique_decisions: {self.unique_decisions}",
            f"fail_closed: {self.failclosed_denied_or_deferred}/{self.failclosed_injected} "
            f"deny-or-defer, {self.failclosed_permits} permits",
            f"coverage: {d['coverage']:.6f} (probes: {self.probes_injected})",
        ]
        return "\n".join(lines)


def run_bench(
    params: GeneratorParams,
    seed: int,
    store_root: str | Path,
    tenant: str = "bench",
    probes: int = 0,
    failclosed_injections: int = 200,
) -> BenchReport:
    """Run the full micro-benchmark against a fresh governor."""
    rng = random.Random(seed ^ 0x5EED)
    normalization = default_normalization()
    program = pad_program(
        demo_policy_program(tenant), rng.randint(*params.policy_corpus)
    )
    entries = pad_state(demo_state_entries(), rng.randint(*params.state_size), seed)
    signing_key, _ = generate_keypair()
    store = LedgerStore(Path(store_root) / "bench", fsync=True)
    governor = Governor(store, signing_key, normalization, default_defer_timeout=5.0)
    governor.register_tenant(tenant, program, entries)

    items = list(generate_workload(params, seed, tenant=tenant))
    state = governor.current_state(tenant)

    # Warm-up batch, discarded.
    for item in items[: params.batch]:
        action, h = canonicalize(item.base, normalization)
        evaluate(action, program, state)

    canon_ns: list[int] = []
    eval_ns: list[int] = []
    record_ns: list[int] = []
    e2e_ns: list[int] = []
    lc = 0
    wall_start = time.perf_counter()
    for item in items:
        t0 = time.perf_counter_ns()
        action, h = canonicalize(item.base, normalization)
        t1 = time.perf_counter_ns()
        decision = evaluate(action, program, state)
        t2 = time.perf_counter_ns()
        lc += 1
        store.append(
            tenant, h, program.version_id, state_digest(state), decision.outcome,
            int(time.time()), lc,
        )
        t3 = time.perf_counter_ns()
        canon_ns.append(t1 - t0)
        eval_ns.append(t2 - t1)
        record_ns.append(t3 - t2)
        e2e_ns.append(t3 - t0)
    wall = time.perf_counter() - wall_start
    throughput = len(items) / wall * 60.0 if wall > 0 else 0.0

    # Determinism sub-test: N syntactic variants of one semantic intent.
    det_n = params.actions
    base = IntentProposal(
        tenant, "agent:mailer",
        {"tool": "email.send", "to": "a@x.com", "subj": "hi", "body": "ok"},
    )
    det_params = GeneratorParams(actions=1, mutations=params.mutations)
    digests = set()
    decisions = set()
    det_state = governor.current_state(tenant)
    variant_pool = _variant_pool(base, det_params, seed)
    for i in range(det_n):
        proposal = variant_pool[i % len(variant_pool)]
        action, h = canonicalize(proposal, normalization)
        digests.add(h.hex)
        d = evaluate(action, program, det_state)
        decisions.add((d.outcome.value, d.matched_rule))

    # Fail-closed sub-test: kill-switch and approval-timeout injections.
    injected = failclosed_injections
    denied = 0
    permits = 0
    governor.kill_switch(True)
    for i in range(injected // 2):
        out = governor.commit(
            IntentProposal(tenant, "agent:web",
                           {"tool": "http.request", "url": f"https://x/{i}"}),
            GovernorMode.INLINE,
        )
        if out.decision.outcome in (Outcome.DENY, Outcome.DEFER):
            denied += 1
        else:
            permits += 1
    governor.kill_switch(False)
    for i in range(injected - injected // 2):
        out = governor.commit(
            IntentProposal(tenant, "agent:mailer",
                           {"tool": "email.send", "to": f"t{i}@x.com", "subj": "s", "body": "b"}),
            GovernorMode.INLINE,
            deadline=0.0,
        )
        if out.decision.outcome in (Outcome.DENY, Outcome.DEFER):
            denied += 1
        else:
            permits += 1

    # Coverage sub-test: permitted corpus through the checking executor,
    # optionally with raw-execution probes injected.
    executor = InstrumentedExecutor(governor, tenant)
    for i in range(200):
        out = governor.commit(
            IntentProposal(tenant, "agent:events",
                           {"tool": "queue.publish", "topic": "bench", "payload_size": i + 1}),
            GovernorMode.INLINE,
        )
        if out.decision.outcome is Outcome.PERMIT and out.artifact is not None:
            action, _ = canonicalize(
                IntentProposal(tenant, "agent:events",
                               {"tool": "queue.publish", "topic": "bench", "payload_size": i + 1}),
                normalization,
            )
            executor.execute(action, out.artifact)
    probe_action, _ = canonicalize(
        IntentProposal(tenant, "agent:events",
                       {"tool": "queue.publish", "topic": "bench", "payload_size": 1}),
        normalization,
    )
    for _ in range(probes):
        executor.raw_execute(probe_action, route="probe")
    counters = executor.snapshot()

    governor.close()
    return BenchReport(
        n=len(items),
        seed=seed,
        canon=PhaseStats.from_ns(canon_ns),
        eval=PhaseStats.from_ns(eval_ns),
        record=PhaseStats.from_ns(record_ns),
        end_to_end=PhaseStats.from_ns(e2e_ns),
        throughput_per_min=throughput,
        unique_hashes=len(digests),
        unique_decisions=len(decisions),
        determinism_samples=det_n,
        failclosed_injected=injected,
        failclosed_denied_or_deferred=denied,
        failclosed_permits=permits,
        coverage=counters.coverage(),
        probes_injected=probes,
        params={
            "schemas": params.schemas,
            "actions": params.actions,
            "mutations": params.mutations,
            "policy_corpus": list(params.policy_corpus),
            "state_size": list(params.state_size),
            "batch": params.batch,
            "workers": params.workers,
        },
    )


def _variant_pool(base: IntentProposal, params: GeneratorParams, seed: int) -> list[IntentProposal]:
    """Materialize a pool of syntactic variants of one intent for reuse."""
    from .workload import FAMILIES, _variant  # family table supplies mutation context

    email = next(f for f in FAMILIES if f.name == "email")
    rng = random.Random(seed ^ 0xD16E57)
    pool = [base]
    for j in range(max(params.mutations, 1) * 8):
        pool.append(
            IntentProposal(
                base.tenant_id, base.actor_ref,
                _variant(dict(base.raw_payload), email, j, rng),
                origin="bench",
            )
        )
    return pool
