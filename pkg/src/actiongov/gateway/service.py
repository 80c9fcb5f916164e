"""HTTP gateway: commit, approvals, ledger read/verify/export, replay, admin.

A thread-per-connection server; inline commits may block their handler thread
until an approval or deadline resolves them, which is exactly the long-poll
behavior approval consoles rely on. Handlers hold no mutable state of their
own; every semantic guarantee comes from the governor underneath.

Endpoints:
    POST /v1/action/commit
    GET  /v1/approvals/pending
    POST /v1/approvals/{hash}/resolve
    GET  /v1/ledger?tenant=&from=&to=
    GET  /v1/ledger/verify?tenant=
    GET  /v1/ledger/export?tenant=
    POST /v1/replay
    POST /v1/admin/kill-switch
    GET  /v1/policies/{version}?tenant=
"""

from __future__ import annotations

import json
import threading
import time
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Any, Mapping
from urllib.parse import parse_qs, unquote, urlparse

from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey

from ..artifacts import ApprovalWitness
from ..canonical import IntentProposal
from ..errors import (
    CanonicalizationError,
    InvalidWitnessSignature,
    NotFound,
    UnknownHash,
    UnresolvableReference,
    IntegrityMismatch,
)
from ..governor import Governor, GovernorMode
from ..policy import PolicyProgram
from ..replay import ReplayEngine, ReplayQuery

__all__ = ["GatewayServer", "build_gateway"]

_CONTROL_KEYS = {"tenant", "mode", "deadline_ms"}


def _rfc3339(ts: float) -> str:
    return datetime.fromtimestamp(ts, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


class GatewayServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(
        self,
        address: tuple[str, int],
        governor: Governor,
        approver_tokens: Mapping[str, tuple[str, Ed25519PrivateKey]],
        operator_token: str,
        default_tenant: str,
    ) -> None:
        super().__init__(address, _Handler)
        self.governor = governor
        self.approver_tokens = dict(approver_tokens)
        self.operator_token = operator_token
        self.default_tenant = default_tenant
        self.replay_engine = ReplayEngine(governor.store)

    def base_url(self) -> str:
        host, port = self.server_address[:2]
        return f"http://{host}:{port}"


def build_gateway(
    governor: Governor,
    approver_tokens: Mapping[str, tuple[str, Ed25519PrivateKey]] | None = None,
    operator_token: str = "",
    default_tenant: str = "acme",
    host: str = "127.0.0.1",
    port: int = 0,
) -> GatewayServer:
    """Bind a gateway (port 0 picks a free port); call serve_forever to run."""
    return GatewayServer((host, port), governor, approver_tokens or {}, operator_token, default_tenant)


def serve_in_thread(server: GatewayServer) -> threading.Thread:
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return thread


class _Handler(BaseHTTPRequestHandler):
    server: GatewayServer

    # -- plumbing -----------------------------------------------------------

    def log_message(self, fmt: str, *args: Any) -> None:  # quiet by default
        pass

    def _json(self, status: int, payload: Any) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _text(self, status: int, body: str, content_type: str = "application/x-ndjson") -> None:
        data = body.encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(data)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(data)

    def _error(self, status: int, code: str, detail: str) -> None:
        self._json(status, {"error": code, "detail": detail})

    def _body(self) -> dict[str, Any]:
        length = int(self.headers.get("Content-Length") or 0)
        if length == 0:
            return {}
        raw = self.rfile.read(length)
        data = json.loads(raw.decode("utf-8"))
        if not isinstance(data, dict):
            raise ValueError("request body must be a JSON object")
        return data

    def _bearer(self) -> str:
        header = self.headers.get("Authorization") or ""
        if header.startswith("Bearer "):
            return header[len("Bearer "):].strip()
        return ""

    def _query(self) -> dict[str, str]:
        qs = parse_qs(urlparse(self.path).query)
        return {k: v[0] for k, v in qs.items()}

    # -- routing ------------------------------------------------------------

    def do_OPTIONS(self) -> None:  # CORS preflight for the console
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Authorization, Content-Type")
        self.end_headers()

    def do_GET(self) -> None:
        path = urlparse(self.path).path
        try:
            if path == "/v1/approvals/pending":
                return self._get_pending()
            if path == "/v1/ledger":
                return self._get_ledger()
            if path == "/v1/ledger/verify":
                return self._get_verify()
            if path == "/v1/ledger/export":
                return self._get_export()
            if path.startswith("/v1/policies/"):
                return self._get_policy(unquote(path.removeprefix("/v1/policies/")))
            if path == "/v1/health":
                return self._json(200, {"ok": True, "tenants": self.server.governor.tenants()})
            return self._error(404, "not_found", f"no route {path}")
        except Exception as exc:  # defensive: handlers must answer
            return self._error(500, "internal", str(exc))

    def do_POST(self) -> None:
        path = urlparse(self.path).path
        try:
            if path == "/v1/action/commit":
                return self._post_commit()
            if path.startswith("/v1/approvals/") and path.endswith("/resolve"):
                h_hex = unquote(path[len("/v1/approvals/"):-len("/resolve")])
                return self._post_resolve(h_hex)
            if path == "/v1/replay":
                return self._post_replay()
            if path == "/v1/admin/kill-switch":
                return self._post_kill_switch()
            return self._error(404, "not_found", f"no route {path}")
        except json.JSONDecodeError as exc:
            return self._error(400, "bad_json", str(exc))
        except Exception as exc:
            return self._error(500, "internal", str(exc))

    # -- commit ---------------------------------------------------------------

    def _post_commit(self) -> None:
        body = self._body()
        tenant = body.get("tenant") or self.server.default_tenant
        mode_name = body.get("mode", "inline")
        try:
            mode = GovernorMode(mode_name)
        except ValueError:
            return self._error(400, "bad_mode", f"unknown mode {mode_name!r}")
        deadline = None
        if "deadline_ms" in body:
            deadline = float(body["deadline_ms"]) / 1000.0
        payload = {k: v for k, v in body.items() if k not in _CONTROL_KEYS}
        proposal = IntentProposal(
            tenant_id=tenant,
            actor_ref=str(body.get("actor", "")),
            raw_payload=payload,
            origin="http",
        )
        try:
            outcome = self.server.governor.commit(proposal, mode, deadline)
        except CanonicalizationError as exc:
            return self._error(400, type(exc).__name__, str(exc))

        record = outcome.record
        response: dict[str, Any] = {
            "decision": outcome.decision.outcome.value.lower(),
            "explanation": outcome.decision.explanation,
            "hash": outcome.h.hex if outcome.h else None,
            "timestamp": _rfc3339(record.ts if record else time.time()),
            "matched_rule": outcome.decision.matched_rule,
            "deduplicated": outcome.deduplicated,
            "pending": outcome.pending,
            "tenant": tenant,
        }
        if record is not None:
            response["seq"] = record.seq
        if outcome.artifact is not None:
            response["artifact"] = outcome.artifact.token()
            response["enforcing"] = outcome.artifact.enforcing
        if record is None:
            # No ledger stream rendered a record (unregistered tenant or
            # storage failure): fail closed, not a 2xx.
            return self._json(403, response)
        return self._json(200, response)

    # -- approvals --------------------------------------------------------------

    def _get_pending(self) -> None:
        tenant = self._query().get("tenant")
        items = self.server.governor.pending_approvals(tenant)
        for item in items:
            item["waiting_since_iso"] = _rfc3339(item["waiting_since"])
        self._json(200, {"pending": items})

    def _post_resolve(self, h_hex: str) -> None:
        token = self._bearer()
        cred = self.server.approver_tokens.get(token)
        if cred is None:
            return self._error(401, "invalid_credential", "unknown approver token")
        approver_id, key = cred
        body = self._body()
        verdict = body.get("verdict", "")
        if verdict not in ("approve", "reject"):
            return self._error(400, "bad_verdict", "verdict must be approve or reject")
        tenant = body.get("tenant") or self.server.default_tenant
        witness = ApprovalWitness.create(key, h_hex, approver_id, verdict)
        try:
            outcome = self.server.governor.resolve_approval(tenant, witness)
        except UnknownHash as exc:
            return self._error(404, "unknown_hash", str(exc))
        except InvalidWitnessSignature as exc:
            return self._error(401, "invalid_witness", str(exc))
        self._json(
            200,
            {
                "decision": outcome.decision.outcome.value.lower(),
                "explanation": outcome.decision.explanation,
                "hash": h_hex,
                "timestamp": _rfc3339(outcome.record.ts if outcome.record else time.time()),
                "seq": outcome.record.seq if outcome.record else None,
                "already_resolved": outcome.deduplicated,
                "artifact_issued": outcome.artifact is not None,
            },
        )

    # -- ledger -------------------------------------------------------------------

    def _get_ledger(self) -> None:
        q = self._query()
        tenant = q.get("tenant") or self.server.default_tenant
        lo = int(q.get("from", 1))
        hi = int(q.get("to", 1 << 62))
        records = [
            self.server.governor.store.project(r).to_dict()
            for r in self.server.governor.store.read_records(tenant)
            if lo <= r.seq <= hi
        ]
        self._json(200, {"tenant": tenant, "records": records})

    def _get_verify(self) -> None:
        tenant = self._query().get("tenant") or self.server.default_tenant
        report = self.server.governor.store.verify_chain(tenant)
        self._json(
            200,
            {
                "tenant": tenant,
                "ok": report.ok,
                "first_broken_seq": report.first_broken_seq,
                "records_checked": report.records_checked,
            },
        )

    def _get_export(self) -> None:
        tenant = self._query().get("tenant") or self.server.default_tenant
        lines = "\n".join(self.server.governor.store.export_lines(tenant))
        self._text(200, lines + ("\n" if lines else ""))

    def _get_policy(self, version: str) -> None:
        tenant = self._query().get("tenant") or self.server.default_tenant
        try:
            source = self.server.governor.store.get_policy_source(tenant, version)
        except NotFound as exc:
            return self._error(404, "unknown_version", str(exc))
        self._json(
            200,
            {
                "tenant": tenant,
                "version_id": version,
                "active": self.server.governor.active_version(tenant) == version,
                "program": source,
            },
        )

    # -- replay ----------------------------------------------------------------------

    def _post_replay(self) -> None:
        body = self._body()
        tenant = body.get("tenant") or self.server.default_tenant
        selector = body.get("selector", "all")
        h_a_hex = None
        seq_range = None
        if isinstance(selector, dict):
            if "hash" in selector:
                h_a_hex = selector["hash"]
            elif "range" in selector:
                lo, hi = selector["range"]
                seq_range = (int(lo), int(hi))
        policy: str | PolicyProgram | None = body.get("policy_version")
        if body.get("policy"):
            policy = PolicyProgram.from_dict(body["policy"])
        state = body.get("state", "as-recorded")
        state_entries = None if state == "as-recorded" else state
        query = ReplayQuery(
            tenant=tenant, h_a_hex=h_a_hex, seq_range=seq_range,
            policy=policy, state_entries=state_entries,
        )
        try:
            results = self.server.replay_engine.replay(query)
        except (UnresolvableReference, IntegrityMismatch) as exc:
            return self._error(409, type(exc).__name__, str(exc))
        flips = [[r.seq, r.recorded, r.replayed] for r in results if r.flipped]
        self._json(
            200,
            {
                "tenant": tenant,
                "total": len(results),
                "flipped": len(flips),
                "flips": flips,
                "results": [
                    {
                        "seq": r.seq,
                        "hash": r.h_a,
                        "recorded": r.recorded,
                        "replayed": r.replayed,
                        "matched_rule": r.matched_rule,
                        "flipped": r.flipped,
                    }
                    for r in results
                ],
            },
        )

    # -- admin --------------------------------------------------------------------------

    def _post_kill_switch(self) -> None:
        token = self._bearer()
        if not self.server.operator_token or token != self.server.operator_token:
            return self._error(401, "invalid_credential", "operator token required")
        body = self._body()
        enabled = bool(body.get("enabled", True))
        state = self.server.governor.kill_switch(enabled)
        self._json(200, {"kill_switch": state})
