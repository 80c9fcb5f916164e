"""Append-only, hash-chained, tamper-evident decision ledger.

One stream per tenant: length-prefixed rows in ``<root>/<tenant>/records.log``
(4-byte big-endian length, then the canonical encoding of the row map). Each
row carries the portable decision tuple plus its record hash; the hash covers
exactly (seq, h_a, v_p, h_s, decision, ts, lc, prev), so any on-disk mutation,
deletion, or reordering is detectable by recomputation. Genesis records link
to 32 zero bytes.

The store also keeps content-addressed side blobs (canonical action bytes by
h_A, state entry bytes by h_S, policy source by version id) so that replay can
resolve every recorded reference without the live governor.

Durability: rows are flushed and fsynced before append() returns; a decision
is final only once its record is on disk.
"""

from __future__ import annotations

import io
import json
import os
import struct
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterator

from .encoding import CanonicalDigest, ZERO_DIGEST, digest_of, encode_map
from .errors import NotFound, StorageFailure
from .policy import Outcome

__all__ = [
    "DecisionRecord",
    "Observation",
    "VerificationReport",
    "LedgerStore",
    "record_hash_of",
]

_LEN = struct.Struct(">I")


@dataclass(frozen=True)
class DecisionRecord:
    """Portable decision tuple; sufficient for verification and replay."""

    seq: int
    h_a: CanonicalDigest
    v_p: str
    h_s: CanonicalDigest
    decision: Outcome
    ts: int
    lc: int
    prev_hash: bytes
    record_hash: bytes

    def hash_payload(self) -> dict[str, Any]:
        return {
            "seq": self.seq,
            "h_a": self.h_a.hex,
            "v_p": self.v_p,
            "h_s": self.h_s.hex,
            "decision": self.decision.value,
            "ts": self.ts,
            "lc": self.lc,
            "prev": self.prev_hash.hex(),
        }

    def row(self) -> dict[str, Any]:
        row = self.hash_payload()
        row["record_hash"] = self.record_hash.hex()
        return row

    @classmethod
    def from_row(cls, row: dict[str, Any]) -> "DecisionRecord":
        return cls(
            seq=row["seq"],
            h_a=CanonicalDigest.from_hex(row["h_a"]),
            v_p=row["v_p"],
            h_s=CanonicalDigest.from_hex(row["h_s"]),
            decision=Outcome(row["decision"]),
            ts=row["ts"],
            lc=row["lc"],
            prev_hash=bytes.fromhex(row["prev"]),
            record_hash=bytes.fromhex(row["record_hash"]),
        )


def record_hash_of(
    seq: int,
    h_a: CanonicalDigest,
    v_p: str,
    h_s: CanonicalDigest,
    decision: Outcome,
    ts: int,
    lc: int,
    prev_hash: bytes,
) -> bytes:
    payload = {
        "seq": seq,
        "h_a": h_a.hex,
        "v_p": v_p,
        "h_s": h_s.hex,
        "decision": decision.value,
        "ts": ts,
        "lc": lc,
        "prev": prev_hash.hex(),
    }
    return digest_of(encode_map(payload)).bytes


@dataclass(frozen=True)
class Observation:
    """Read-only export projection of a record.

    Executor-facing secrets (artifact nonces) never appear here; identity
    fields, ordering, and chain hashes are preserved so the exported stream
    verifies independently.
    """

    seq: int
    h_a: str
    v_p: str
    h_s: str
    decision: str
    ts: int
    lc: int
    prev_hash: str
    record_hash: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "seq": self.seq,
            "h_a": self.h_a,
            "v_p": self.v_p,
            "h_s": self.h_s,
            "decision": self.decision,
            "ts": self.ts,
            "lc": self.lc,
            "prev": self.prev_hash,
            "record_hash": self.record_hash,
        }


@dataclass(frozen=True)
class VerificationReport:
    ok: bool
    first_broken_seq: int | None
    records_checked: int


class LedgerStore:
    """Per-tenant decision streams plus content-addressed side stores.

    Append access is single-writer per tenant (the governor serializes);
    reads take an independent snapshot of the file and may run concurrently.
    """

    def __init__(self, root: str | Path, fsync: bool = True) -> None:
        self.root = Path(root)
        self.fsync = fsync
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()
        self._tails: dict[str, DecisionRecord | None] = {}
        self._hash_index: dict[str, dict[int, bytes]] = {}
        self.root.mkdir(parents=True, exist_ok=True)

    # -- layout ------------------------------------------------------------

    def _tenant_dir(self, tenant: str) -> Path:
        return self.root / tenant

    def _log_path(self, tenant: str) -> Path:
        return self._tenant_dir(tenant) / "records.log"

    def _lock_for(self, tenant: str) -> threading.Lock:
        with self._locks_guard:
            lock = self._locks.get(tenant)
            if lock is None:
                lock = self._locks[tenant] = threading.Lock()
            return lock

    # -- append path ---------------------------------------------------------

    def append(
        self,
        tenant: str,
        h_a: CanonicalDigest,
        v_p: str,
        h_s: CanonicalDigest,
        decision: Outcome,
        ts: int,
        lc: int,
    ) -> DecisionRecord:
        """Append one record; persisted (fsync) before this returns.

        Raises StorageFailure if durability cannot be established; the caller
        must then treat the decision as unrendered and fail closed.
        """
        lock = self._lock_for(tenant)
        with lock:
            tail = self._tail(tenant)
            seq = 1 if tail is None else tail.seq + 1
            prev = ZERO_DIGEST.bytes if tail is None else tail.record_hash
            rh = record_hash_of(seq, h_a, v_p, h_s, decision, ts, lc, prev)
            record = DecisionRecord(
                seq=seq, h_a=h_a, v_p=v_p, h_s=h_s, decision=decision,
                ts=ts, lc=lc, prev_hash=prev, record_hash=rh,
            )
            row_bytes = encode_map(record.row())
            try:
                path = self._log_path(tenant)
                path.parent.mkdir(parents=True, exist_ok=True)
                with open(path, "ab") as fh:
                    fh.write(_LEN.pack(len(row_bytes)))
                    fh.write(row_bytes)
                    fh.flush()
                    if self.fsync:
                        os.fsync(fh.fileno())
            except OSError as exc:
                raise StorageFailure(f"ledger append failed for {tenant!r}: {exc}") from exc
            self._tails[tenant] = record
            self._hash_index.setdefault(tenant, {})[record.seq] = record.record_hash
            return record

    def _tail(self, tenant: str) -> DecisionRecord | None:
        if tenant in self._tails:
            return self._tails[tenant]
        tail: DecisionRecord | None = None
        index = self._hash_index.setdefault(tenant, {})
        for record in self.read_records(tenant):
            tail = record
            index[record.seq] = record.record_hash
        self._tails[tenant] = tail
        return tail

    def has_record(self, tenant: str, seq: int, record_hash: bytes) -> bool:
        """O(1) presence check against the in-memory index of appended rows."""
        lock = self._lock_for(tenant)
        with lock:
            if tenant not in self._tails:
                self._tail(tenant)
            return self._hash_index.get(tenant, {}).get(seq) == record_hash

    # -- read path -----------------------------------------------------------

    def read_rows(self, tenant: str) -> Iterator[dict[str, Any]]:
        path = self._log_path(tenant)
        if not path.exists():
            return
        with open(path, "rb") as fh:
            data = fh.read()
        buf = io.BytesIO(data)
        while True:
            header = buf.read(4)
            if not header:
                return
            if len(header) < 4:
                raise StorageFailure(f"truncated length prefix in {path}")
            (length,) = _LEN.unpack(header)
            body = buf.read(length)
            if len(body) < length:
                raise StorageFailure(f"truncated row in {path}")
            yield json.loads(body.decode("utf-8"))

    def read_records(self, tenant: str) -> Iterator[DecisionRecord]:
        for row in self.read_rows(tenant):
            yield DecisionRecord.from_row(row)

    def record_by_seq(self, tenant: str, seq: int) -> DecisionRecord:
        for record in self.read_records(tenant):
            if record.seq == seq:
                return record
        raise NotFound(f"no record seq={seq} for tenant {tenant!r}")

    def latest_for_hash(self, tenant: str, h_a_hex: str) -> DecisionRecord | None:
        latest: DecisionRecord | None = None
        for record in self.read_records(tenant):
            if record.h_a.hex == h_a_hex:
                latest = record
        return latest

    def count(self, tenant: str) -> int:
        return sum(1 for _ in self.read_rows(tenant))

    # -- verification ----------------------------------------------------------

    def verify_chain(self, tenant: str) -> VerificationReport:
        """Recompute every record hash and linkage; report first inconsistency.

        Corruption is a report, not an exception. ``first_broken_seq`` is the
        expected sequence number at the first failing position, so a deleted
        record reports the gap it left and a reordered pair reports the first
        displaced position.
        """
        expected_seq = 1
        prev = ZERO_DIGEST.bytes
        checked = 0
        try:
            for row in self.read_rows(tenant):
                checked += 1
                try:
                    record = DecisionRecord.from_row(row)
                except (KeyError, ValueError):
                    return VerificationReport(False, expected_seq, checked)
                if record.seq != expected_seq:
                    return VerificationReport(False, expected_seq, checked)
                if record.prev_hash != prev:
                    return VerificationReport(False, expected_seq, checked)
                recomputed = record_hash_of(
                    record.seq, record.h_a, record.v_p, record.h_s,
                    record.decision, record.ts, record.lc, record.prev_hash,
                )
                if recomputed != record.record_hash:
                    return VerificationReport(False, expected_seq, checked)
                prev = record.record_hash
                expected_seq += 1
        except (StorageFailure, json.JSONDecodeError, UnicodeDecodeError):
            return VerificationReport(False, expected_seq, checked + 1)
        return VerificationReport(True, None, checked)

    # -- projection / export -----------------------------------------------------

    def project(self, record: DecisionRecord) -> Observation:
        return Observation(
            seq=record.seq,
            h_a=record.h_a.hex,
            v_p=record.v_p,
            h_s=record.h_s.hex,
            decision=record.decision.value,
            ts=record.ts,
            lc=record.lc,
            prev_hash=record.prev_hash.hex(),
            record_hash=record.record_hash.hex(),
        )

    def project_by_seq(self, tenant: str, seq: int) -> Observation:
        return self.project(self.record_by_seq(tenant, seq))

    def export(self, tenant: str) -> Iterator[Observation]:
        """Unidirectional export stream; nothing here can write back."""
        for record in self.read_records(tenant):
            yield self.project(record)

    def export_lines(self, tenant: str) -> Iterator[str]:
        for obs in self.export(tenant):
            yield json.dumps(obs.to_dict(), sort_keys=True)

    # -- artifact issuance sidecar -------------------------------------------------

    def attach_artifact_nonce(self, tenant: str, seq: int, nonce_hex: str) -> None:
        """Record which artifact nonce was issued against a record (internal
        store only; projections never expose it)."""
        path = self._tenant_dir(tenant) / "artifacts.idx"
        path.parent.mkdir(parents=True, exist_ok=True)
        with self._lock_for(tenant):
            with open(path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps({"seq": seq, "nonce": nonce_hex}) + "\n")

    def artifact_nonces(self, tenant: str) -> dict[int, list[str]]:
        path = self._tenant_dir(tenant) / "artifacts.idx"
        out: dict[int, list[str]] = {}
        if not path.exists():
            return out
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                entry = json.loads(line)
                out.setdefault(entry["seq"], []).append(entry["nonce"])
        return out

    def internal_row(self, tenant: str, seq: int) -> dict[str, Any]:
        """Internal view: record row plus any attached artifact nonces."""
        record = self.record_by_seq(tenant, seq)
        row = record.row()
        nonces = self.artifact_nonces(tenant).get(seq)
        if nonces:
            row["artifact_nonces"] = nonces
        return row

    # -- side stores --------------------------------------------------------------

    def _blob_path(self, tenant: str, kind: str, name: str) -> Path:
        safe = name.replace(":", "_").replace("/", "_")
        return self._tenant_dir(tenant) / kind / safe

    def put_blob(self, tenant: str, kind: str, name: str, data: bytes) -> None:
        path = self._blob_path(tenant, kind, name)
        if path.exists():
            return
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp")
        with open(tmp, "wb") as fh:
            fh.write(data)
            fh.flush()
            if self.fsync:
                os.fsync(fh.fileno())
        os.replace(tmp, path)

    def get_blob(self, tenant: str, kind: str, name: str) -> bytes:
        path = self._blob_path(tenant, kind, name)
        if not path.exists():
            raise NotFound(f"no {kind} blob {name!r} for tenant {tenant!r}")
        with open(path, "rb") as fh:
            return fh.read()

    def put_action_bytes(self, tenant: str, h_a: CanonicalDigest, data: bytes) -> None:
        self.put_blob(tenant, "actions", h_a.hex, data)

    def get_action_bytes(self, tenant: str, h_a_hex: str) -> bytes:
        return self.get_blob(tenant, "actions", h_a_hex)

    def put_state_bytes(self, tenant: str, h_s: CanonicalDigest, data: bytes) -> None:
        self.put_blob(tenant, "states", h_s.hex, data)

    def get_state_bytes(self, tenant: str, h_s_hex: str) -> bytes:
        return self.get_blob(tenant, "states", h_s_hex)

    def put_policy_source(self, tenant: str, version_id: str, source: dict[str, Any]) -> None:
        self.put_blob(tenant, "policies", version_id, json.dumps(source, sort_keys=True).encode())

    def get_policy_source(self, tenant: str, version_id: str) -> dict[str, Any]:
        return json.loads(self.get_blob(tenant, "policies", version_id).decode("utf-8"))

    def tenants(self) -> list[str]:
        if not self.root.exists():
            return []
        return sorted(p.name for p in self.root.iterdir() if (p / "records.log").exists())
