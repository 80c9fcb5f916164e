"""Instrumented in-process executors.

Effects are counters, not real side effects: what matters for the evaluation
is whether an execution happened and whether a valid artifact mediated it.
The artifact-checking executor refuses anything that does not validate
(signature, bound hash, window, policy version, revocation, consumption,
enforcing flag) and consumes single-use actions so duplicates cannot
double-execute. ``raw_execute`` models a non-compliant execution path and is
used only by bypass probes and the architectural baselines.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from typing import Any

from ..artifacts import ExecutionArtifact
from ..canonical import CanonicalAction, encode
from ..encoding import digest_of
from ..errors import NoPermitDecision
from ..governor import ConsumeResult, Governor

__all__ = ["ExecutorCounters", "InstrumentedExecutor"]


@dataclass
class ExecutorCounters:
    attempts: int = 0
    executions: int = 0
    executions_without_valid_artifact: int = 0
    rejects: dict[str, int] = field(default_factory=dict)

    def coverage(self) -> float:
        if self.attempts == 0:
            return 1.0
        return 1.0 - self.executions_without_valid_artifact / self.attempts


class InstrumentedExecutor:
    """Artifact-only execution stub with full attempt accounting."""

    def __init__(self, governor: Governor, tenant: str) -> None:
        self.governor = governor
        self.tenant = tenant
        self.counters = ExecutorCounters()
        self.execution_log: list[dict[str, Any]] = []
        self._lock = threading.Lock()

    def _reject(self, reason: str) -> bool:
        with self._lock:
            self.counters.rejects[reason] = self.counters.rejects.get(reason, 0) + 1
        return False

    def execute(
        self,
        action: CanonicalAction,
        artifact: ExecutionArtifact | None,
        route: str = "sdk-a",
        now: float | None = None,
    ) -> bool:
        """Attempt an effect; proceeds only behind a valid artifact.

        Every route through this executor performs the same checks, so using
        an alternate SDK path buys an attacker nothing.
        """
        with self._lock:
            self.counters.attempts += 1
        presented = digest_of(encode(action))
        result = self.governor.artifacts.validate(
            artifact,
            presented,
            self.governor.active_version(self.tenant),
            consumed=lambda hx: self.governor.is_consumed(self.tenant, hx),
            now=now,
        )
        if not result.accepted:
            return self._reject(result.reason.value)
        if artifact.single_use:
            try:
                won = self.governor.consume(self.tenant, presented.hex)
            except NoPermitDecision:
                return self._reject("NoPermitDecision")
            if won is not ConsumeResult.FIRST_CONSUMER:
                return self._reject("AlreadyConsumed")
        with self._lock:
            self.counters.executions += 1
            self.execution_log.append(
                {"h_a": presented.hex, "route": route, "at": time.time(), "artifact": True}
            )
        return True

    def raw_execute(self, action: CanonicalAction, route: str = "raw") -> bool:
        """Non-compliant path: executes with no artifact at all.

        Exists so the harness can inject bypass probes and realize the
        baseline architectures; coverage arithmetic counts these.
        """
        presented = digest_of(encode(action))
        with self._lock:
            self.counters.attempts += 1
            self.counters.executions += 1
            self.counters.executions_without_valid_artifact += 1
            self.execution_log.append(
                {"h_a": presented.hex, "route": route, "at": time.time(), "artifact": False}
            )
        return True

    def snapshot(self) -> ExecutorCounters:
        with self._lock:
            return ExecutorCounters(
                attempts=self.counters.attempts,
                executions=self.counters.executions,
                executions_without_valid_artifact=self.counters.executions_without_valid_artifact,
                rejects=dict(self.counters.rejects),
            )
