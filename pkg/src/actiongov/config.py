"""Deployment configuration and the demo corpus.

The normalization tables, demo policy program, and initial state defined here
are the reference corpus used by the CLI ``init`` scaffold, the gateway, the
evaluation harness, and the test suite. Tables live inside the trusted
computing base: changing them changes canonical identities, so they are
loaded once at startup and never mutated at runtime.
"""

from __future__ import annotations

import json
import secrets
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey

from .artifacts import (
    ApproverRegistry,
    generate_keypair,
    load_private_key,
    save_private_key,
)
from .canonical import NormalizationConfig
from .errors import ConfigError
from .governor import Governor
from .ledger import LedgerStore
from .policy import PolicyProgram, load_policy_file

__all__ = [
    "default_normalization",
    "demo_policy_program",
    "demo_state_entries",
    "tightened_program",
    "TenantConfig",
    "DeploymentConfig",
    "build_governor",
    "write_demo_deployment",
]

DEFAULT_TENANT = "acme"
DEMO_POLICY_VERSION = "policies:v12"


def default_normalization() -> NormalizationConfig:
    """Reference normalization tables for the eight demo tool families."""
    return NormalizationConfig.from_dict(
        {
            "operation_vocabulary": [
                "http.request",
                "fs.write",
                "shell.exec",
                "db.update",
                "queue.publish",
                "refund",
                "email.send",
                "deploy",
            ],
            "alias_map": {
                "prod": "production",
                "stage": "staging",
                "release": "deploy",
                "mail.send": "email.send",
                "svc_billing": "billing",
            },
            "field_synonyms": {
                # identity mappings keep already-canonical payloads a fixed point
                "actor": "actor",
                "operation": "operation",
                "resource": "resource",
                "parameters": "parameters",
                "context": "context",
                "blast_radius": "blast_radius",
                # operation spellings
                "tool": "operation",
                "action": "operation",
                "verb": "operation",
                # resource spellings
                "service": "resource",
                "target": "resource",
                "url": "resource",
                "path": "resource",
                "table": "resource",
                "topic": "resource",
                "customer": "resource",
                "host": "resource",
                "to": "resource",
                # parameter spellings
                "env": "parameters.environment",
                "environment": "parameters.environment",
                "subj": "parameters.subject",
                "subject": "parameters.subject",
                "body": "parameters.body",
                "amount": "parameters.amount",
                "currency": "parameters.currency",
                "method": "parameters.method",
                "replicas": "parameters.replicas",
                "command": "parameters.command",
                "rows": "parameters.rows",
                "payload_size": "parameters.payload_size",
                "mode": "parameters.mode",
                "content": "parameters.content",
                # execution-relevant qualifiers
                "note": "context.note",
                "region": "context.region",
                "channel": "context.channel",
            },
            "default_values": {
                "refund": {"parameters.currency": "USD"},
                "http.request": {"parameters.method": "GET"},
                "deploy": {"parameters.replicas": 1},
                "fs.write": {"parameters.mode": "append"},
            },
            "operation_blast_radius": {
                "http.request": "service",
                "fs.write": "resource",
                "shell.exec": "environment",
                "db.update": "service",
                "queue.publish": "service",
                "refund": "resource",
                "email.send": "service",
                "deploy": "environment",
            },
            "default_blast_radius": "resource",
            "discard_keys": [
                "justification",
                "reasoning",
                "rationale",
                "trace",
                "trace_id",
                "request_id",
                "comment",
                "confidence",
            ],
        }
    )


def demo_policy_program(
    tenant_id: str = DEFAULT_TENANT, version_id: str = DEMO_POLICY_VERSION
) -> PolicyProgram:
    """Reference rule set: a mix of static, dynamic, and approval rules."""
    return PolicyProgram.from_dict(
        {
            "version_id": version_id,
            "tenant_id": tenant_id,
            "rules": [
                {
                    "rule_id": "deny-global-blast",
                    "kind": "static",
                    "match": {"blast_radius": "global"},
                    "effect": "deny",
                },
                {
                    "rule_id": "deny-email-budget-exhausted",
                    "kind": "dynamic",
                    "match": {"operation": "email.send"},
                    "state_predicate": {"budget:email": {"lte": 0}},
                    "effect": "deny",
                },
                {
                    "rule_id": "approve-email",
                    "kind": "approval",
                    "match": {"operation": "email.send"},
                    "effect": "defer",
                    "approval_key": "approval/email.send",
                },
                {
                    "rule_id": "approve-prod-deploy",
                    "kind": "approval",
                    "match": {"operation": "deploy", "parameters.environment": "production"},
                    "effect": "defer",
                    "approval_key": "approval/deploy",
                },
                {
                    "rule_id": "allow-deploy",
                    "kind": "static",
                    "match": {"operation": "deploy"},
                    "effect": "permit",
                },
                {
                    "rule_id": "refund-within-budget",
                    "kind": "dynamic",
                    "match": {"operation": "refund"},
                    "state_predicate": {
                        "budget:refunds": {"gte": {"param": "parameters.amount"}}
                    },
                    "effect": "permit",
                    "consume_effects": [
                        {"key": "budget:refunds", "op": "sub", "value": {"param": "parameters.amount"}}
                    ],
                },
                {
                    "rule_id": "approve-shell",
                    "kind": "approval",
                    "match": {"operation": "shell.exec"},
                    "effect": "defer",
                    "approval_key": "approval/shell",
                },
                {
                    "rule_id": "allow-db-within-quota",
                    "kind": "dynamic",
                    "match": {"operation": "db.update"},
                    "state_predicate": {"quota:db": {"gt": 0}},
                    "effect": "permit",
                    "consume_effects": [{"key": "quota:db", "op": "sub", "value": 1}],
                },
                {
                    "rule_id": "allow-routine",
                    "kind": "static",
                    "match": {"operation": ["http.request", "queue.publish", "fs.write"]},
                    "effect": "permit",
                },
            ],
        }
    )


def demo_state_entries() -> dict[str, Any]:
    return {"budget:email": 25, "budget:refunds": 1000, "quota:db": 500}


def tightened_program(program: PolicyProgram, suffix: str = "-tight") -> PolicyProgram:
    """Deterministic tightening: deny email and shell outright, cap refunds."""
    source = program.to_dict()
    source["version_id"] = program.version_id + suffix
    source["rules"] = [
        {
            "rule_id": "tighten-deny-email",
            "kind": "static",
            "match": {"operation": "email.send"},
            "effect": "deny",
        },
        {
            "rule_id": "tighten-deny-shell",
            "kind": "static",
            "match": {"operation": "shell.exec"},
            "effect": "deny",
        },
        {
            "rule_id": "tighten-cap-refunds",
            "kind": "static",
            "match": {"operation": "refund", "parameters.amount": {"gt": 250}},
            "effect": "deny",
        },
    ] + source["rules"]
    return PolicyProgram.from_dict(source)


@dataclass(frozen=True)
class TenantConfig:
    tenant_id: str
    policy_path: str | None = None
    initial_state: Mapping[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class DeploymentConfig:
    """Everything a governor process needs, loadable from one JSON file."""

    ledger_dir: str
    signing_key_path: str
    listen_host: str = "127.0.0.1"
    listen_port: int = 8787
    normalization_path: str | None = None
    tenants: tuple[TenantConfig, ...] = ()
    approvers: Mapping[str, Mapping[str, str]] = field(default_factory=dict)
    operator_token: str = ""
    kill_switch: bool = False
    defer_timeout_s: float = 300.0
    artifact_ttl_s: float = 300.0
    fsync: bool = True
    base_dir: Path = Path(".")

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else self.base_dir / p

    @classmethod
    def from_file(cls, path: str | Path) -> "DeploymentConfig":
        path = Path(path)
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        try:
            tenants = tuple(
                TenantConfig(
                    tenant_id=t["tenant_id"],
                    policy_path=t.get("policy_path"),
                    initial_state=t.get("initial_state", {}),
                )
                for t in data.get("tenants", ())
            )
            return cls(
                ledger_dir=data["ledger_dir"],
                signing_key_path=data["signing_key_path"],
                listen_host=data.get("listen_host", "127.0.0.1"),
                listen_port=data.get("listen_port", 8787),
                normalization_path=data.get("normalization_path"),
                tenants=tenants,
                approvers=data.get("approvers", {}),
                operator_token=data.get("operator_token", ""),
                kill_switch=data.get("kill_switch", False),
                defer_timeout_s=data.get("defer_timeout_s", 300.0),
                artifact_ttl_s=data.get("artifact_ttl_s", 300.0),
                fsync=data.get("fsync", True),
                base_dir=path.parent,
            )
        except KeyError as exc:
            raise ConfigError(f"deployment config missing key: {exc}") from exc


def build_governor(config: DeploymentConfig) -> tuple[Governor, dict[str, tuple[str, Ed25519PrivateKey]]]:
    """Wire a governor from a deployment config.

    Returns the governor plus the approver credential map
    (bearer token -> (approver_id, signing key)) used by the gateway to sign
    witnesses on behalf of authenticated approvers.
    """
    if config.normalization_path:
        normalization = NormalizationConfig.from_file(config.resolve(config.normalization_path))
    else:
        normalization = default_normalization()

    signing_key = load_private_key(config.resolve(config.signing_key_path))
    store = LedgerStore(config.resolve(config.ledger_dir), fsync=config.fsync)
    registry = ApproverRegistry()
    tokens: dict[str, tuple[str, Ed25519PrivateKey]] = {}
    for approver_id, spec in config.approvers.items():
        key = load_private_key(config.resolve(spec["key_path"]))
        registry.register(approver_id, key.public_key())
        token = spec.get("token", "")
        if token:
            tokens[token] = (approver_id, key)

    governor = Governor(
        store,
        signing_key,
        normalization,
        approvers=registry,
        artifact_ttl=config.artifact_ttl_s,
        default_defer_timeout=config.defer_timeout_s,
    )
    for tenant in config.tenants:
        if tenant.policy_path:
            program = load_policy_file(config.resolve(tenant.policy_path))
        else:
            program = demo_policy_program(tenant.tenant_id)
        governor.register_tenant(tenant.tenant_id, program, tenant.initial_state)
    if config.kill_switch:
        governor.kill_switch(True)
    return governor, tokens


def write_demo_deployment(directory: str | Path) -> Path:
    """Scaffold a runnable deployment: keys, policy, tables, config.json."""
    root = Path(directory)
    (root / "keys").mkdir(parents=True, exist_ok=True)
    (root / "policies").mkdir(parents=True, exist_ok=True)

    governor_key, _ = generate_keypair()
    save_private_key(governor_key, root / "keys" / "governor.key")
    approvers: dict[str, dict[str, str]] = {}
    for name in ("alice", "bob"):
        key, _ = generate_keypair()
        save_private_key(key, root / "keys" / f"{name}.key")
        approvers[name] = {
            "key_path": f"keys/{name}.key",
            "token": f"{name}-{secrets.token_hex(8)}",
        }

    program = demo_policy_program(DEFAULT_TENANT)
    with open(root / "policies" / "acme.json", "w", encoding="utf-8") as fh:
        json.dump(program.to_dict(), fh, indent=2, sort_keys=True)

    norm = default_normalization()
    with open(root / "normalization.json", "w", encoding="utf-8") as fh:
        json.dump(
            {
                "operation_vocabulary": sorted(norm.operation_vocabulary),
                "alias_map": dict(norm.alias_map),
                "field_synonyms": dict(norm.field_synonyms),
                "default_values": {k: dict(v) for k, v in norm.default_values.items()},
                "operation_blast_radius": dict(norm.operation_blast_radius),
                "default_blast_radius": norm.default_blast_radius,
                "discard_keys": sorted(norm.discard_keys),
            },
            fh,
            indent=2,
            sort_keys=True,
        )

    config = {
        "ledger_dir": "ledger",
        "signing_key_path": "keys/governor.key",
        "listen_host": "127.0.0.1",
        "listen_port": 8787,
        "normalization_path": "normalization.json",
        "tenants": [
            {
                "tenant_id": DEFAULT_TENANT,
                "policy_path": "policies/acme.json",
                "initial_state": demo_state_entries(),
            }
        ],
        "approvers": approvers,
        "operator_token": f"operator-{secrets.token_hex(8)}",
        "kill_switch": False,
        "defer_timeout_s": 300.0,
        "artifact_ttl_s": 300.0,
        "fsync": True,
    }
    config_path = root / "config.json"
    with open(config_path, "w", encoding="utf-8") as fh:
        json.dump(config, fh, indent=2, sort_keys=True)
    return config_path
