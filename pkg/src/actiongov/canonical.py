"""Canonicalizer: raw intent proposals -> canonical actions -> digests.

Normalization collapses representational variance (key order, alias tokens,
whitespace noise, elided defaults, null/empty clutter, non-authoritative
metadata) so that semantically equivalent proposals produce byte-identical
encodings and therefore identical SHA-256 digests. The digest is the semantic
identity of an action instance; everything downstream (policy evaluation,
dedup, artifacts, replay) keys on it.

Pure functions only: no I/O, no clock, no mutation of inputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .encoding import CanonicalDigest, digest_of, encode_value
from .errors import ConfigError, MalformedPayload, MissingRequiredField, UnknownOperation

__all__ = [
    "BLAST_RADII",
    "IntentProposal",
    "CanonicalAction",
    "NormalizationConfig",
    "canonicalize",
    "encode",
    "action_from_fields",
]

# Scope-of-impact vocabulary, ordered from narrowest to widest.
BLAST_RADII = ("resource", "service", "environment", "tenant", "global")

_TOP_LEVEL_ORDER = (
    "actor",
    "target",
    "operation",
    "resource",
    "parameters",
    "blast_radius",
    "context",
)

_SCALAR_FIELDS = {"actor", "target", "operation", "resource", "blast_radius"}
_MAP_FIELDS = {"parameters", "context"}


@dataclass(frozen=True)
class IntentProposal:
    """A raw, untrusted execution proposal as received from an agent.

    `origin` is a transport tag carried for observability only; it never
    influences normalization output.
    """

    tenant_id: str
    actor_ref: str
    raw_payload: Mapping[str, Any]
    origin: str = ""


@dataclass(frozen=True)
class CanonicalAction:
    """Normalized execution intent; the sole input to authorization."""

    actor: str = ""
    target: str = ""
    operation: str = ""
    resource: str = ""
    parameters: Mapping[str, Any] = field(default_factory=dict)
    blast_radius: str = ""
    context: Mapping[str, Any] = field(default_factory=dict)

    def get(self, dotted: str) -> Any:
        """Resolve a dotted path like ``parameters.amount``; None if absent."""
        head, _, rest = dotted.partition(".")
        value: Any
        if head in _SCALAR_FIELDS:
            value = getattr(self, head)
            return value if value != "" else None
        if head in _MAP_FIELDS:
            value = getattr(self, head)
            if not rest:
                return value
            for part in rest.split("."):
                if not isinstance(value, Mapping) or part not in value:
                    return None
                value = value[part]
            return value
        return None


@dataclass(frozen=True)
class NormalizationConfig:
    """Vocabularies and rewrite tables; part of the trusted computing base.

    Loaded once at startup and immutable for the life of the process. Changing
    any table changes canonical identities, so config changes imply a new
    deployment.

    field_synonyms maps raw payload keys to destinations: one of the scalar
    schema fields, ``parameters``/``context`` (whole-map merge), or a dotted
    entry such as ``parameters.environment``. Raw keys with no mapping land in
    ``context`` under their own (trimmed) name, except keys listed in
    ``discard_keys``, which carry no execution semantics and are dropped.

    default_values is keyed by operation (``*`` applies to every operation)
    and makes schema defaults explicit, collapsing elided and spelled-out
    defaults to one form.
    """

    operation_vocabulary: frozenset[str]
    alias_map: Mapping[str, str] = field(default_factory=dict)
    field_synonyms: Mapping[str, str] = field(default_factory=dict)
    default_values: Mapping[str, Mapping[str, Any]] = field(default_factory=dict)
    operation_blast_radius: Mapping[str, str] = field(default_factory=dict)
    default_blast_radius: str = "resource"
    discard_keys: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        for src, dst in self.alias_map.items():
            follow = self.alias_map.get(dst, dst)
            if follow != dst:
                raise ConfigError(f"alias map is not idempotent at {src!r} -> {dst!r} -> {follow!r}")
        for dst in self.operation_blast_radius.values():
            if dst not in BLAST_RADII:
                raise ConfigError(f"unknown blast radius {dst!r}")
        if self.default_blast_radius not in BLAST_RADII:
            raise ConfigError(f"unknown default blast radius {self.default_blast_radius!r}")
        for raw, dest in self.field_synonyms.items():
            head = dest.split(".", 1)[0]
            if head not in _SCALAR_FIELDS and head not in _MAP_FIELDS:
                raise ConfigError(f"field synonym {raw!r} targets unknown field {dest!r}")

    def alias(self, token: str) -> str:
        return self.alias_map.get(token, token)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "NormalizationConfig":
        defaults_raw = data.get("default_values", {})
        defaults = {op: dict(vals) for op, vals in defaults_raw.items()}
        return cls(
            operation_vocabulary=frozenset(data["operation_vocabulary"]),
            alias_map=dict(data.get("alias_map", {})),
            field_synonyms=dict(data.get("field_synonyms", {})),
            default_values=defaults,
            operation_blast_radius=dict(data.get("operation_blast_radius", {})),
            default_blast_radius=data.get("default_blast_radius", "resource"),
            discard_keys=frozenset(data.get("discard_keys", ())),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "NormalizationConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _normalize_value(value: Any, config: NormalizationConfig, depth: int = 0) -> Any:
    """Trim, alias, and strip nulls/empties; returns None when a value elides."""
    if depth > 64:
        raise MalformedPayload("payload nesting exceeds maximum depth")
    if value is None:
        return None
    if isinstance(value, bool):
        return value
    if isinstance(value, (int, float)):
        return value
    if isinstance(value, str):
        trimmed = value.strip()
        if trimmed == "":
            return None
        return config.alias(trimmed)
    if isinstance(value, (list, tuple)):
        items = [_normalize_value(v, config, depth + 1) for v in value]
        items = [v for v in items if v is not None]
        return items or None
    if isinstance(value, Mapping):
        out: dict[str, Any] = {}
        for key, val in value.items():
            if not isinstance(key, str):
                raise MalformedPayload(f"non-string key {key!r} in payload")
            norm_key = key.strip()
            if norm_key == "":
                raise MalformedPayload("empty key in payload")
            if norm_key in out:
                raise MalformedPayload(f"duplicate key {norm_key!r} after trimming")
            norm_val = _normalize_value(val, config, depth + 1)
            if norm_val is not None:
                out[norm_key] = norm_val
        return out or None
    raise MalformedPayload(f"value of type {type(value).__name__} is not representable")


class _FieldAccumulator:
    """Collects normalized values per destination, rejecting conflicts."""

    def __init__(self) -> None:
        self.scalars: dict[str, str] = {}
        self.maps: dict[str, dict[str, Any]] = {"parameters": {}, "context": {}}

    def set_scalar(self, dest: str, value: Any, source_key: str) -> None:
        if not isinstance(value, str):
            raise MalformedPayload(f"field {dest!r} (from {source_key!r}) must be a string")
        existing = self.scalars.get(dest)
        if existing is not None and existing != value:
            raise MalformedPayload(f"conflicting values for field {dest!r}")
        self.scalars[dest] = value

    def set_entry(self, map_name: str, key: str, value: Any) -> None:
        bucket = self.maps[map_name]
        if key in bucket and bucket[key] != value:
            raise MalformedPayload(f"conflicting values for {map_name}.{key}")
        bucket[key] = value


def canonicalize(
    proposal: IntentProposal, config: NormalizationConfig
) -> tuple[CanonicalAction, CanonicalDigest]:
    """Normalize a proposal into its canonical action and digest.

    All proposals that are equivalent under the normalization rules yield one
    canonical action, one byte encoding, and one digest. Non-authoritative
    payload (discard-listed keys, null/empty noise) is removed; unmapped keys
    survive in ``context`` so benign metadata does not fail the boundary.
    """
    payload = proposal.raw_payload
    if not isinstance(payload, Mapping):
        raise MalformedPayload("raw payload must be a string-keyed tree")

    acc = _FieldAccumulator()
    actor_ref = proposal.actor_ref.strip() if isinstance(proposal.actor_ref, str) else ""

    seen: set[str] = set()
    for raw_key, raw_value in payload.items():
        if not isinstance(raw_key, str):
            raise MalformedPayload(f"non-string key {raw_key!r} in payload")
        key = raw_key.strip()
        if key == "":
            raise MalformedPayload("empty key in payload")
        if key in seen:
            raise MalformedPayload(f"duplicate key {key!r} after trimming")
        seen.add(key)

        if key in config.discard_keys:
            continue

        value = _normalize_value(raw_value, config)
        if value is None:
            continue

        dest = config.field_synonyms.get(key)
        if dest is None:
            acc.set_entry("context", key, value)
        elif dest in _SCALAR_FIELDS:
            acc.set_scalar(dest, value, key)
        elif dest in _MAP_FIELDS:
            if not isinstance(value, dict):
                raise MalformedPayload(f"field {dest!r} (from {key!r}) must be a map")
            for sub_key, sub_val in value.items():
                acc.set_entry(dest, sub_key, sub_val)
        else:
            map_name, _, entry = dest.partition(".")
            acc.set_entry(map_name, entry, value)

    # Defaults become explicit so that elided and spelled-out forms collapse.
    for scope in ("*", acc.scalars.get("operation", "")):
        for dest, default in config.default_values.get(scope, {}).items():
            head, _, entry = dest.partition(".")
            if head in _SCALAR_FIELDS:
                acc.scalars.setdefault(head, default)
            elif head in _MAP_FIELDS and entry:
                acc.maps[head].setdefault(entry, default)

    operation = acc.scalars.get("operation", "")
    if operation and operation not in config.operation_vocabulary:
        raise UnknownOperation(f"operation {operation!r} is not in the vocabulary")

    resource = acc.scalars.get("resource", "")
    if not operation or not resource:
        raise MissingRequiredField("no operation or resource derivable from payload")

    blast = acc.scalars.get("blast_radius") or config.operation_blast_radius.get(
        operation, config.default_blast_radius
    )
    if blast not in BLAST_RADII:
        raise MalformedPayload(f"blast radius {blast!r} is not in the vocabulary")

    action = CanonicalAction(
        actor=acc.scalars.get("actor", actor_ref),
        target=acc.scalars.get("target", ""),
        operation=operation,
        resource=resource,
        parameters=dict(acc.maps["parameters"]),
        blast_radius=blast,
        context=dict(acc.maps["context"]),
    )
    return action, digest_of(encode(action))


def encode(action: CanonicalAction) -> bytes:
    """Byte-exact deterministic encoding of a canonical action.

    Top-level fields appear in the fixed order actor, target, operation,
    resource, parameters, blast_radius, context; empty fields are elided
    entirely; map keys inside parameters/context are code-point sorted.
    """
    parts: list[str] = []
    for name in _TOP_LEVEL_ORDER:
        value = getattr(action, name)
        if value == "" or value == {} or value is None:
            continue
        if isinstance(value, Mapping):
            value = dict(value)
        parts.append(
            encode_value(name).decode("utf-8") + ":" + encode_value(value).decode("utf-8")
        )
    return ("{" + ",".join(parts) + "}").encode("utf-8")


def action_from_fields(fields: Mapping[str, Any]) -> CanonicalAction:
    """Rebuild a canonical action from decoded canonical bytes."""
    return CanonicalAction(
        actor=fields.get("actor", ""),
        target=fields.get("target", ""),
        operation=fields.get("operation", ""),
        resource=fields.get("resource", ""),
        parameters=dict(fields.get("parameters", {})),
        blast_radius=fields.get("blast_radius", ""),
        context=dict(fields.get("context", {})),
    )
