"""Seeded synthetic workload generator.

Eight tool families (HTTP, filesystem, shell, DB, queue, billing, email,
infra). Each generated item carries a base proposal, M syntactic variants
built from the mutation operators (parameter reordering, alias substitution,
synonym key substitution, whitespace/null noise, default elision vs explicit
defaults, irrelevant-field injection), and one semantic variant that alters
exactly one execution-relevant field. Syntactic variants must collapse to the
base digest; the semantic variant must not.

All randomness flows from the single seed, so any run regenerates
bit-identically.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Any, Callable, Iterator, Mapping

from ..canonical import IntentProposal
from ..encoding import encode_map
from ..policy import PolicyProgram

__all__ = [
    "GeneratorParams",
    "WorkloadItem",
    "FAMILIES",
    "generate_workload",
    "pad_program",
    "pad_state",
    "approval_delay",
]


@dataclass(frozen=True)
class GeneratorParams:
    """Workload knobs; defaults mirror the evaluation setup."""

    schemas: int = 8  # K
    actions: int = 10_000  # N
    mutations: int = 6  # M per action
    policy_corpus: tuple[int, int] = (64, 256)
    state_size: tuple[int, int] = (4_096, 65_536)  # bytes
    batch: int = 8
    workers: int = 16
    repetitions: int = 5
    approval_delay_mu: float = 0.050  # lognormal location, seconds
    approval_delay_sigma: float = 0.5
    p_miss: float = 0.01
    p_timeout: float = 0.005

    def __post_init__(self) -> None:
        if min(self.schemas, self.actions, self.mutations, self.batch, self.workers) <= 0:
            raise ValueError("counts must be positive")
        if not (0.0 <= self.p_miss <= 1.0 and 0.0 <= self.p_timeout <= 1.0):
            raise ValueError("probabilities must lie in [0, 1]")


@dataclass(frozen=True)
class WorkloadItem:
    index: int
    family: str
    base: IntentProposal
    variants: tuple[IntentProposal, ...]
    semantic_variant: IntentProposal
    inject_missing: bool
    inject_timeout: bool


_SERVICES = ("payments", "search", "web", "billing", "ingest")
_TABLES = ("orders", "users", "invoices", "events")
_TOPICS = ("orders.created", "users.updated", "alerts")
_SUBJECTS = ("hi", "weekly report", "invoice attached", "reminder")
_BODIES = ("ok", "see attachment", "numbers look good", "ping me")
_ORIGINS = ("mcp", "http", "sdk", "cli")

# Surface alias choices the generator may substitute; each pair collapses
# under the reference alias map.
_VALUE_ALIASES = {"production": "prod", "staging": "stage"}
_OP_ALIASES = {"deploy": "release", "email.send": "mail.send"}
_OP_KEYS = ("tool", "action", "verb")
_IRRELEVANT = (
    ("justification", "the model decided this is helpful"),
    ("reasoning", "step 4 of plan"),
    ("trace_id", "tr-000"),
    ("confidence", "0.97"),
)


@dataclass(frozen=True)
class _Family:
    name: str
    actor: str
    make: Callable[[random.Random, int], dict[str, Any]]
    # key -> alternate spellings mapping to the same schema destination
    key_synonyms: Mapping[str, tuple[str, ...]]
    # payload keys whose value equals a configured default (safe to elide)
    defaultable: tuple[str, ...]
    semantic: Callable[[dict[str, Any], random.Random], dict[str, Any]]


def _mut_amount(payload: dict[str, Any], rng: random.Random) -> dict[str, Any]:
    out = dict(payload)
    out["amount"] = payload["amount"] + 1
    return out


FAMILIES: tuple[_Family, ...] = (
    _Family(
        "http",
        "agent:web",
        lambda rng, n: {
            "tool": "http.request",
            "url": f"https://api.example.com/v1/objects/{n}",
            "method": "GET",
        },
        {},
        ("method",),
        lambda p, rng: {**p, "url": p["url"] + "/alt"},
    ),
    _Family(
        "filesystem",
        "agent:fs",
        lambda rng, n: {
            "tool": "fs.write",
            "path": f"/var/data/file-{n % 997}.log",
            "content": f"entry-{n}",
            "mode": "append",
        },
        {},
        ("mode",),
        lambda p, rng: {**p, "path": p["path"] + ".bak"},
    ),
    _Family(
        "shell",
        "agent:ops",
        lambda rng, n: {
            "tool": "shell.exec",
            "host": f"host-{n % 23}.internal",
            "command": f"systemctl restart unit-{n % 7}",
        },
        {},
        (),
        lambda p, rng: {**p, "command": p["command"] + " --force"},
    ),
    _Family(
        "db",
        "agent:data",
        lambda rng, n: {
            "tool": "db.update",
            "table": _TABLES[n % len(_TABLES)],
            "rows": 1 + (n % 50),
        },
        {"table": ("table",)},
        (),
        lambda p, rng: {**p, "rows": p["rows"] + 1},
    ),
    _Family(
        "queue",
        "agent:events",
        lambda rng, n: {
            "tool": "queue.publish",
            "topic": _TOPICS[n % len(_TOPICS)],
            "payload_size": 64 + (n % 4032),
        },
        {},
        (),
        lambda p, rng: {**p, "payload_size": p["payload_size"] + 1},
    ),
    _Family(
        "billing",
        "agent:billing",
        lambda rng, n: {
            "tool": "refund",
            "customer": f"cust-{n % 1511}",
            "amount": 5 + (n % 896),
            "currency": "USD",
        },
        {},
        ("currency",),
        _mut_amount,
    ),
    _Family(
        "email",
        "agent:mailer",
        lambda rng, n: {
            "tool": "email.send",
            "to": f"user{n % 631}@example.com",
            "subj": _SUBJECTS[n % len(_SUBJECTS)],
            "body": _BODIES[n % len(_BODIES)],
        },
        {"subj": ("subj", "subject")},
        (),
        lambda p, rng: {**p, "to": "other-" + p["to"]},
    ),
    _Family(
        "infra",
        "agent:deployer",
        lambda rng, n: {
            "tool": "deploy",
            "service": _SERVICES[n % len(_SERVICES)],
            "env": "staging" if n % 3 else "production",
            "replicas": 1,
        },
        {"service": ("service", "target")},
        ("replicas",),
        lambda p, rng: {**p, "env": "production" if p["env"] == "staging" else "staging"},
    ),
)


def _reorder(payload: dict[str, Any], rng: random.Random) -> dict[str, Any]:
    keys = list(payload)
    rng.shuffle(keys)
    return {k: payload[k] for k in keys}


def _alias_substitute(payload: dict[str, Any], rng: random.Random) -> dict[str, Any]:
    out = {}
    for k, v in payload.items():
        if isinstance(v, str) and v in _OP_ALIASES and k in _OP_KEYS:
            v = _OP_ALIASES[v]
        elif isinstance(v, str) and v in _VALUE_ALIASES:
            v = _VALUE_ALIASES[v]
        out[k] = v
    return out


def _key_synonyms(payload: dict[str, Any], family: _Family, rng: random.Random) -> dict[str, Any]:
    out = {}
    for k, v in payload.items():
        if k in _OP_KEYS:
            out[rng.choice(_OP_KEYS)] = v
        else:
            choices = family.key_synonyms.get(k)
            out[rng.choice(choices) if choices else k] = v
    return out


def _noise(payload: dict[str, Any], rng: random.Random) -> dict[str, Any]:
    out = dict(payload)
    str_keys = [k for k, v in out.items() if isinstance(v, str) and k not in _OP_KEYS]
    if str_keys:
        k = rng.choice(str_keys)
        out[k] = " " * rng.randint(1, 3) + out[k] + " " * rng.randint(0, 2)
    out["meta"] = {"x": None} if rng.random() < 0.5 else {}
    return out


def _default_toggle(payload: dict[str, Any], family: _Family, rng: random.Random) -> dict[str, Any]:
    out = dict(payload)
    for key in family.defaultable:
        out.pop(key, None)
    return out


def _inject_irrelevant(payload: dict[str, Any], rng: random.Random) -> dict[str, Any]:
    out = dict(payload)
    for key, value in rng.sample(_IRRELEVANT, k=2):
        out[key] = value
    return out


def _variant(payload: dict[str, Any], family: _Family, j: int, rng: random.Random) -> dict[str, Any]:
    mutated = dict(payload)
    op = j % 6
    if op == 1:
        mutated = _alias_substitute(mutated, rng)
    elif op == 2:
        mutated = _key_synonyms(mutated, family, rng)
    elif op == 3:
        mutated = _noise(mutated, rng)
    elif op == 4:
        mutated = _default_toggle(mutated, family, rng)
    elif op == 5:
        mutated = _inject_irrelevant(mutated, rng)
    return _reorder(mutated, rng)


def generate_workload(
    params: GeneratorParams, seed: int, tenant: str = "acme"
) -> Iterator[WorkloadItem]:
    """Deterministic stream of adversarial workload items."""
    rng = random.Random(seed)
    families = FAMILIES[: min(params.schemas, len(FAMILIES))]
    for i in range(params.actions):
        family = families[rng.randrange(len(families))]
        payload = family.make(rng, i)
        base = IntentProposal(tenant, family.actor, payload, origin=rng.choice(_ORIGINS))
        variants = tuple(
            IntentProposal(
                tenant, family.actor, _variant(payload, family, j, rng),
                origin=rng.choice(_ORIGINS),
            )
            for j in range(params.mutations)
        )
        semantic = IntentProposal(
            tenant, family.actor, _reorder(family.semantic(payload, rng), rng),
            origin=rng.choice(_ORIGINS),
        )
        yield WorkloadItem(
            index=i,
            family=family.name,
            base=base,
            variants=variants,
            semantic_variant=semantic,
            inject_missing=rng.random() < params.p_miss,
            inject_timeout=rng.random() < params.p_timeout,
        )


def pad_program(program: PolicyProgram, total_rules: int) -> PolicyProgram:
    """Grow a program to the target corpus size with inert leading rules.

    Pad rules match operations outside the vocabulary, so they change nothing
    semantically while making evaluation walk a corpus of the requested size.
    """
    source = program.to_dict()
    existing = len(source["rules"])
    pads = [
        {
            "rule_id": f"pad-{i}",
            "kind": "static",
            "match": {"operation": f"pad.op{i}"},
            "effect": "deny",
        }
        for i in range(max(total_rules - existing, 0))
    ]
    source["rules"] = pads + source["rules"]
    return PolicyProgram.from_dict(source)


def pad_state(entries: Mapping[str, Any], target_bytes: int, seed: int = 0) -> dict[str, Any]:
    """Grow state entries until their canonical encoding reaches target_bytes."""
    rng = random.Random(seed)
    out = dict(entries)
    i = 0
    while len(encode_map(out)) < target_bytes:
        out[f"pad:counter:{i}"] = rng.randrange(1_000_000)
        i += 1
    return out


def approval_delay(params: GeneratorParams, rng: random.Random) -> float:
    """Sample a human-approval delay (seconds) from the configured lognormal."""
    return rng.lognormvariate(math.log(params.approval_delay_mu), params.approval_delay_sigma)
