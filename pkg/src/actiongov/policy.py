"""Policy engine: pure, deterministic evaluation of (action, program, state).

Rules are evaluated first-match in list order; the closed decision space is
PERMIT / DEFER / DENY with DENY as the no-match default. Evaluation reads no
clock, performs no I/O, and mutates nothing: identical inputs always return
the identical decision.

Fail-closed behavior is a returned decision, not an exception: a matched
dynamic rule that references a missing state key resolves to DENY with an
explanation, never to PERMIT.
"""

from __future__ import annotations

import enum
import functools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

from .canonical import CanonicalAction, encode
from .encoding import CanonicalDigest, digest_of, encode_map
from .errors import PolicyError, TenantMismatch

__all__ = [
    "Outcome",
    "RuleKind",
    "Rule",
    "PolicyProgram",
    "StateSnapshot",
    "Decision",
    "KILL_SWITCH_KEY",
    "POLICY_AVAILABLE_KEY",
    "evaluate",
    "state_digest",
    "witness_entry_key",
    "load_policy_file",
]


class Outcome(str, enum.Enum):
    PERMIT = "PERMIT"
    DEFER = "DEFER"
    DENY = "DENY"


class RuleKind(str, enum.Enum):
    STATIC = "static"
    DYNAMIC = "dynamic"
    APPROVAL = "approval"


_EFFECT_TO_OUTCOME = {
    "permit": Outcome.PERMIT,
    "defer": Outcome.DEFER,
    "deny": Outcome.DENY,
}

_COMPARATORS = ("eq", "ne", "in", "gt", "gte", "lt", "lte", "prefix")


class _MissingStateKey(Exception):
    """Internal signal: a matched rule referenced an absent state key."""


# Governor control signals live inside state so that every recorded decision,
# including fail-closed ones, is a pure function of (action, program, state)
# and therefore reproducible under replay.
KILL_SWITCH_KEY = "governor:kill_switch"
POLICY_AVAILABLE_KEY = "governor:policy_available"


@dataclass(frozen=True)
class Rule:
    """One declarative rule.

    ``match`` constrains canonical-action fields (dotted paths allowed);
    ``state_predicate`` constrains state entries and may compare against an
    action parameter via ``{"param": "parameters.amount"}``. Approval rules
    carry ``approval_key``, the state-key prefix under which a witness for the
    action's digest is expected, and ``effect`` must be ``defer``.
    ``consume_effects`` are state updates applied when a permitted single-use
    action is first consumed (budgets, rate counters).
    """

    rule_id: str
    kind: RuleKind
    match: Mapping[str, Any] = field(default_factory=dict)
    state_predicate: Mapping[str, Any] = field(default_factory=dict)
    effect: str = "deny"
    approval_key: str = ""
    idempotent: bool = False
    consume_effects: Sequence[Mapping[str, Any]] = ()

    def __post_init__(self) -> None:
        if self.effect not in _EFFECT_TO_OUTCOME:
            raise PolicyError(f"rule {self.rule_id!r}: unknown effect {self.effect!r}")
        if self.kind is RuleKind.STATIC and self.state_predicate:
            raise PolicyError(f"rule {self.rule_id!r}: static rules reference no state keys")
        if self.kind is RuleKind.APPROVAL:
            if self.effect != "defer":
                raise PolicyError(f"rule {self.rule_id!r}: approval rules must defer")
            if not self.approval_key:
                raise PolicyError(f"rule {self.rule_id!r}: approval rules need approval_key")


@dataclass(frozen=True)
class PolicyProgram:
    """Immutable, versioned rule set. Any edit is a new version_id."""

    version_id: str
    tenant_id: str
    rules: tuple[Rule, ...]

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "PolicyProgram":
        try:
            rules = tuple(
                Rule(
                    rule_id=r["rule_id"],
                    kind=RuleKind(r.get("kind", "static")),
                    match=dict(r.get("match", {})),
                    state_predicate=dict(r.get("state_predicate", {})),
                    effect=r.get("effect", "deny"),
                    approval_key=r.get("approval_key", ""),
                    idempotent=bool(r.get("idempotent", False)),
                    consume_effects=tuple(r.get("consume_effects", ())),
                )
                for r in data.get("rules", ())
            )
        except KeyError as exc:
            raise PolicyError(f"rule missing required field: {exc}") from exc
        return cls(
            version_id=data["version_id"],
            tenant_id=data.get("tenant_id", "default"),
            rules=rules,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "version_id": self.version_id,
            "tenant_id": self.tenant_id,
            "rules": [
                {
                    "rule_id": r.rule_id,
                    "kind": r.kind.value,
                    "match": dict(r.match),
                    "state_predicate": dict(r.state_predicate),
                    "effect": r.effect,
                    "approval_key": r.approval_key,
                    "idempotent": r.idempotent,
                    "consume_effects": [dict(e) for e in r.consume_effects],
                }
                for r in self.rules
            ],
        }

    def rule_by_id(self, rule_id: str) -> Rule | None:
        for rule in self.rules:
            if rule.rule_id == rule_id:
                return rule
        return None


@dataclass(frozen=True)
class StateSnapshot:
    """Immutable evaluation-relevant state with a canonical digest."""

    tenant_id: str
    entries: Mapping[str, Any] = field(default_factory=dict)
    captured_at: float = 0.0

    @functools.cached_property
    def digest(self) -> CanonicalDigest:
        # Safe to cache: snapshots are immutable once captured.
        return digest_of(encode_map(dict(self.entries)))

    def with_entries(self, updates: Mapping[str, Any], captured_at: float) -> "StateSnapshot":
        merged = dict(self.entries)
        merged.update(updates)
        return StateSnapshot(tenant_id=self.tenant_id, entries=merged, captured_at=captured_at)

    def without(self, key: str, captured_at: float) -> "StateSnapshot":
        remaining = {k: v for k, v in self.entries.items() if k != key}
        return StateSnapshot(tenant_id=self.tenant_id, entries=remaining, captured_at=captured_at)


@dataclass(frozen=True)
class Decision:
    """One of exactly three outcomes, plus the matched rule and a reason."""

    outcome: Outcome
    matched_rule: str
    explanation: str


def state_digest(state: StateSnapshot) -> CanonicalDigest:
    """SHA-256 over the canonical encoding of the snapshot's entries."""
    return state.digest


def witness_entry_key(approval_key: str, h_hex: str) -> str:
    """State key under which the approval witness for a given digest lives."""
    return f"{approval_key}/{h_hex}"


def _compare(op: str, left: Any, right: Any) -> bool:
    try:
        if op == "eq":
            return bool(left == right)
        if op == "ne":
            return bool(left != right)
        if op == "in":
            return left in right
        if op == "gt":
            return left > right
        if op == "gte":
            return left >= right
        if op == "lt":
            return left < right
        if op == "lte":
            return left <= right
        if op == "prefix":
            return isinstance(left, str) and isinstance(right, str) and left.startswith(right)
    except TypeError:
        return False
    raise PolicyError(f"unknown comparator {op!r}")


def _match_condition(spec: Any, value: Any, action: CanonicalAction | None = None) -> bool:
    """Match one field against a condition spec.

    Scalars mean equality, lists mean membership, dicts hold comparators.
    An absent value never matches.
    """
    if value is None:
        return False
    if isinstance(spec, Mapping):
        for op, operand in spec.items():
            if isinstance(operand, Mapping) and "param" in operand:
                if action is None:
                    return False
                operand = action.get(operand["param"])
                if operand is None:
                    return False
            if not _compare(op, value, operand):
                return False
        return True
    if isinstance(spec, (list, tuple)):
        return value in spec
    return bool(value == spec)


def _action_matches(rule: Rule, action: CanonicalAction) -> bool:
    for path, spec in rule.match.items():
        if not _match_condition(spec, action.get(path)):
            return False
    return True


def _state_predicate_holds(rule: Rule, state: StateSnapshot, action: CanonicalAction) -> bool:
    for key, spec in rule.state_predicate.items():
        if key not in state.entries:
            raise _MissingStateKey(key)
        if not _match_condition(spec, state.entries[key], action):
            return False
    return True


def _is_witness_for(entry: Any, h_hex: str) -> bool:
    return (
        isinstance(entry, Mapping)
        and entry.get("kind") == "approval_witness"
        and entry.get("h_a") == h_hex
        and entry.get("verdict") in ("approve", "reject")
    )


def evaluate(action: CanonicalAction, program: PolicyProgram, state: StateSnapshot) -> Decision:
    """First-match evaluation of an action against a program under a state.

    An approval rule that matches returns DEFER unless a witness for the
    action's digest is present in state, in which case the witness verdict
    decides (approve -> PERMIT, reject -> DENY). Witness signatures are
    verified when a witness is admitted into state, so evaluation itself stays
    a pure function of its three inputs.
    """
    if program.tenant_id != state.tenant_id:
        raise TenantMismatch(
            f"program tenant {program.tenant_id!r} != state tenant {state.tenant_id!r}"
        )

    if state.entries.get(KILL_SWITCH_KEY):
        return Decision(Outcome.DENY, "default", "fail-closed: kill switch engaged")
    if state.entries.get(POLICY_AVAILABLE_KEY) is False:
        return Decision(Outcome.DENY, "default", "fail-closed: policy unavailable")

    h_hex: str | None = None
    for rule in program.rules:
        if not _action_matches(rule, action):
            continue
        if rule.kind is not RuleKind.STATIC and rule.state_predicate:
            try:
                if not _state_predicate_holds(rule, state, action):
                    continue
            except _MissingStateKey:
                return Decision(Outcome.DENY, rule.rule_id, "fail-closed: missing context")
        if rule.kind is RuleKind.APPROVAL:
            if h_hex is None:
                h_hex = digest_of(encode(action)).hex
            witness = state.entries.get(witness_entry_key(rule.approval_key, h_hex))
            if _is_witness_for(witness, h_hex):
                if witness["verdict"] == "approve":
                    return Decision(
                        Outcome.PERMIT, rule.rule_id,
                        f"approved by {witness.get('approver_id', 'unknown')}",
                    )
                return Decision(
                    Outcome.DENY, rule.rule_id,
                    f"rejected by {witness.get('approver_id', 'unknown')}",
                )
            if isinstance(witness, Mapping) and witness.get("kind") == "approval_timeout":
                return Decision(Outcome.DENY, rule.rule_id, "fail-closed: approval timeout")
            return Decision(Outcome.DEFER, rule.rule_id, "approval required")
        outcome = _EFFECT_TO_OUTCOME[rule.effect]
        return Decision(outcome, rule.rule_id, f"matched rule {rule.rule_id}")
    return Decision(Outcome.DENY, "default", "fail-closed: no matching rule")


def load_policy_file(path: str | Path) -> PolicyProgram:
    """Compile a declarative policy file (documented keys: rule_id, kind,
    match, state_predicate, effect, approval_key) into a program."""
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict) or "version_id" not in data:
        raise PolicyError(f"policy file {path}: missing version_id")
    return PolicyProgram.from_dict(data)
