"""Independent reference encoder used as a test oracle.

This module deliberately re-implements the canonical byte encoding from the
documented rules (sorted map keys, fixed top-level field order, elision of
empties, JSON-style minimal escaping, shortest round-trip numbers) WITHOUT
importing anything from src/. Tests compare package output against bytes and
digests produced here, so a shared bug cannot hide in shared code.
"""

from __future__ import annotations

import hashlib

_TOP_LEVEL_ORDER = (
    "actor",
    "target",
    "operation",
    "resource",
    "parameters",
    "blast_radius",
    "context",
)

_ESCAPES = {
    '"': '\\"',
    "\\": "\\\\",
    "\b": "\\b",
    "\f": "\\f",
    "\n": "\\n",
    "\r": "\\r",
    "\t": "\\t",
}


def oracle_string(s: str) -> str:
    out = ['"']
    for ch in s:
        if ch in _ESCAPES:
            out.append(_ESCAPES[ch])
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)


def oracle_value(v) -> str:
    if v is True:
        return "true"
    if v is False:
        return "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, str):
        return oracle_string(v)
    if isinstance(v, (list, tuple)):
        return "[" + ",".join(oracle_value(x) for x in v) + "]"
    if isinstance(v, dict):
        parts = [oracle_string(k) + ":" + oracle_value(v[k]) for k in sorted(v)]
        return "{" + ",".join(parts) + "}"
    raise TypeError(f"oracle cannot encode {type(v)!r}")


def oracle_action_bytes(fields: dict) -> bytes:
    """Encode a seven-field action dict with the fixed top-level order.

    Empty values ("" / {} / [] / None) are omitted, mirroring the elision rule.
    """
    parts = []
    for name in _TOP_LEVEL_ORDER:
        v = fields.get(name)
        if v is None or v == "" or v == {} or v == []:
            continue
        parts.append(oracle_string(name) + ":" + oracle_value(v))
    return ("{" + ",".join(parts) + "}").encode("utf-8")


def oracle_map_bytes(entries: dict) -> bytes:
    return oracle_value(entries).encode("utf-8")


def oracle_sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def oracle_record_hash(seq, h_a_hex, v_p, h_s_hex, decision, ts, lc, prev_hex) -> str:
    """Recompute a decision-record hash from the portable tuple fields."""
    payload = {
        "decision": decision,
        "h_a": h_a_hex,
        "h_s": h_s_hex,
        "lc": lc,
        "prev": prev_hex,
        "seq": seq,
        "ts": ts,
        "v_p": v_p,
    }
    return oracle_sha256_hex(oracle_map_bytes(payload))


if __name__ == "__main__":
    email_fields = {
        "actor": "agent:mailer",
        "operation": "email.send",
        "resource": "a@x.com",
        "parameters": {"body": "ok", "subject": "hi"},
        "blast_radius": "service",
    }
    email_bytes = oracle_action_bytes(email_fields)
    print("email bytes :", email_bytes)
    print("email digest:", oracle_sha256_hex(email_bytes))

    deploy_fields = {
        "actor": "agent:deployer",
        "operation": "deploy",
        "resource": "payments",
        "parameters": {"environment": "production", "replicas": 1},
        "blast_radius": "environment",
    }
    deploy_bytes = oracle_action_bytes(deploy_fields)
    print("deploy bytes :", deploy_bytes)
    print("deploy digest:", oracle_sha256_hex(deploy_bytes))

    print("empty-entries digest:", oracle_sha256_hex(oracle_map_bytes({})))
