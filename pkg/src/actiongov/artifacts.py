"""Execution artifacts: signed, time-windowed PERMIT credentials.

An artifact binds a PERMIT decision to (h_A, v_P, h_S) with a validity window,
a single-use flag, an enforcing flag (false only for shadow decisions), and a
random nonce, all signed with the governor's Ed25519 key. Executors accept an
effect only against an artifact that validates; every failing conjunct has its
own reject reason so bypass attempts are attributable.

Approval witnesses live here too: signed verdicts from registered approvers
that the governor merges into state before re-evaluating a deferred action.
"""

from __future__ import annotations

import base64
import dataclasses
import enum
import json
import secrets
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Mapping

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

from .encoding import CanonicalDigest, encode_map
from .errors import InvalidWitnessSignature, LedgerMissing, NotPermit
from .ledger import DecisionRecord, LedgerStore
from .policy import Outcome

__all__ = [
    "ExecutionArtifact",
    "ApprovalWitness",
    "ApproverRegistry",
    "RevocationList",
    "RejectReason",
    "ValidationResult",
    "ArtifactService",
    "validate_artifact",
    "generate_keypair",
    "load_private_key",
    "save_private_key",
]

_SIG_LEN = 64


def generate_keypair() -> tuple[Ed25519PrivateKey, Ed25519PublicKey]:
    private = Ed25519PrivateKey.generate()
    return private, private.public_key()


def save_private_key(key: Ed25519PrivateKey, path: str | Path) -> None:
    raw = key.private_bytes_raw()
    Path(path).write_text(raw.hex() + "\n", encoding="utf-8")


def load_private_key(path: str | Path) -> Ed25519PrivateKey:
    raw = bytes.fromhex(Path(path).read_text(encoding="utf-8").strip())
    return Ed25519PrivateKey.from_private_bytes(raw)


def public_key_hex(key: Ed25519PublicKey) -> str:
    return key.public_bytes_raw().hex()


def public_key_from_hex(hx: str) -> Ed25519PublicKey:
    return Ed25519PublicKey.from_public_bytes(bytes.fromhex(hx))


@dataclass(frozen=True)
class ExecutionArtifact:
    """Signed single-use credential for exactly one canonical action."""

    h_a: CanonicalDigest
    v_p: str
    h_s: CanonicalDigest
    decision: Outcome
    valid_from: float
    valid_until: float
    single_use: bool
    enforcing: bool
    nonce: bytes
    signature: bytes

    def sign_payload(self) -> bytes:
        return encode_map(
            {
                "h_a": self.h_a.hex,
                "v_p": self.v_p,
                "h_s": self.h_s.hex,
                "decision": self.decision.value,
                "valid_from": self.valid_from,
                "valid_until": self.valid_until,
                "single_use": self.single_use,
                "enforcing": self.enforcing,
                "nonce": self.nonce.hex(),
            }
        )

    def token(self) -> str:
        """Opaque wire form: base64url(canonical payload bytes || signature)."""
        return base64.urlsafe_b64encode(self.sign_payload() + self.signature).decode("ascii")

    @classmethod
    def from_token(cls, token: str) -> "ExecutionArtifact":
        raw = base64.urlsafe_b64decode(token.encode("ascii"))
        if len(raw) <= _SIG_LEN:
            raise ValueError("token too short")
        payload, signature = raw[:-_SIG_LEN], raw[-_SIG_LEN:]
        fields = json.loads(payload.decode("utf-8"))
        artifact = cls(
            h_a=CanonicalDigest.from_hex(fields["h_a"]),
            v_p=fields["v_p"],
            h_s=CanonicalDigest.from_hex(fields["h_s"]),
            decision=Outcome(fields["decision"]),
            valid_from=fields["valid_from"],
            valid_until=fields["valid_until"],
            single_use=fields["single_use"],
            enforcing=fields["enforcing"],
            nonce=bytes.fromhex(fields["nonce"]),
            signature=signature,
        )
        # The wire payload must be the canonical encoding byte-for-byte;
        # otherwise distinct byte strings could alias one signed artifact.
        if artifact.sign_payload() != payload:
            raise ValueError("non-canonical artifact payload")
        return artifact


@dataclass(frozen=True)
class ApprovalWitness:
    """A signed human verdict over one canonical action digest."""

    h_a: str
    approver_id: str
    verdict: str  # "approve" | "reject"
    t: int
    signature: bytes

    def sign_payload(self) -> bytes:
        return encode_map(
            {
                "h_a": self.h_a,
                "approver_id": self.approver_id,
                "verdict": self.verdict,
                "t": self.t,
            }
        )

    def to_entry(self) -> dict[str, Any]:
        """Representation merged into state snapshots (canonical scalars only)."""
        return {
            "kind": "approval_witness",
            "h_a": self.h_a,
            "approver_id": self.approver_id,
            "verdict": self.verdict,
            "t": self.t,
            "signature": self.signature.hex(),
        }

    @classmethod
    def create(
        cls, key: Ed25519PrivateKey, h_a: str, approver_id: str, verdict: str, t: int | None = None
    ) -> "ApprovalWitness":
        if verdict not in ("approve", "reject"):
            raise ValueError(f"unknown verdict {verdict!r}")
        t = int(time.time()) if t is None else t
        unsigned = cls(h_a=h_a, approver_id=approver_id, verdict=verdict, t=t, signature=b"")
        return cls(h_a=h_a, approver_id=approver_id, verdict=verdict, t=t,
                   signature=key.sign(unsigned.sign_payload()))


class ApproverRegistry:
    """Registered approver verification keys; witnesses from anyone else fail."""

    def __init__(self) -> None:
        self._keys: dict[str, Ed25519PublicKey] = {}

    def register(self, approver_id: str, key: Ed25519PublicKey) -> None:
        self._keys[approver_id] = key

    def verify(self, witness: ApprovalWitness) -> None:
        key = self._keys.get(witness.approver_id)
        if key is None:
            raise InvalidWitnessSignature(f"approver {witness.approver_id!r} is not registered")
        try:
            key.verify(witness.signature, witness.sign_payload())
        except InvalidSignature as exc:
            raise InvalidWitnessSignature(
                f"bad signature from approver {witness.approver_id!r}"
            ) from exc


class RevocationList:
    """Monotone-growing set of revoked artifact nonces."""

    def __init__(self) -> None:
        self._revoked: set[bytes] = set()
        self._lock = threading.Lock()

    def revoke(self, nonce: bytes) -> None:
        with self._lock:
            self._revoked.add(nonce)

    def is_revoked(self, nonce: bytes) -> bool:
        with self._lock:
            return nonce in self._revoked

    def __len__(self) -> int:
        with self._lock:
            return len(self._revoked)


class RejectReason(str, enum.Enum):
    MISSING_OR_BAD_SIGNATURE = "MissingOrBadSignature"
    HASH_MISMATCH = "HashMismatch"
    EXPIRED = "Expired"
    STALE_POLICY = "StalePolicy"
    REVOKED = "Revoked"
    ALREADY_CONSUMED = "AlreadyConsumed"
    NON_ENFORCING = "NonEnforcing"


@dataclass(frozen=True)
class ValidationResult:
    accepted: bool
    reason: RejectReason | None = None

    def __bool__(self) -> bool:  # pragma: no cover - convenience
        return self.accepted


def validate_artifact(
    artifact: ExecutionArtifact | None,
    presented_h: CanonicalDigest,
    active_v_p: str,
    now: float,
    revocations: RevocationList,
    consumed: Callable[[str], bool],
    verify_key: Ed25519PublicKey,
) -> ValidationResult:
    """Total executor-side validator; each failing conjunct has its reason.

    Accept iff the signature verifies, the presented hash equals the bound
    hash, `now` falls inside the validity window, the policy version is still
    active, the nonce is not revoked, a single-use action is not yet consumed,
    and the artifact is enforcing.
    """
    if artifact is None:
        return ValidationResult(False, RejectReason.MISSING_OR_BAD_SIGNATURE)
    try:
        verify_key.verify(artifact.signature, artifact.sign_payload())
    except (InvalidSignature, ValueError):
        return ValidationResult(False, RejectReason.MISSING_OR_BAD_SIGNATURE)
    if artifact.h_a != presented_h:
        return ValidationResult(False, RejectReason.HASH_MISMATCH)
    if not (artifact.valid_from <= now <= artifact.valid_until):
        return ValidationResult(False, RejectReason.EXPIRED)
    if artifact.v_p != active_v_p:
        return ValidationResult(False, RejectReason.STALE_POLICY)
    if revocations.is_revoked(artifact.nonce):
        return ValidationResult(False, RejectReason.REVOKED)
    if artifact.single_use and consumed(artifact.h_a.hex):
        return ValidationResult(False, RejectReason.ALREADY_CONSUMED)
    if not artifact.enforcing:
        return ValidationResult(False, RejectReason.NON_ENFORCING)
    return ValidationResult(True, None)


class ArtifactService:
    """Issues and revokes artifacts against finalized PERMIT records."""

    def __init__(
        self,
        signing_key: Ed25519PrivateKey,
        store: LedgerStore,
        default_ttl: float = 300.0,
        clock: Callable[[], float] = time.time,
    ) -> None:
        self._key = signing_key
        self._store = store
        self._default_ttl = default_ttl
        self._clock = clock
        self.verify_key: Ed25519PublicKey = signing_key.public_key()
        self.revocations = RevocationList()
        self._issuance_log: list[dict[str, Any]] = []
        self._lock = threading.Lock()

    def issue(
        self,
        tenant: str,
        record: DecisionRecord,
        ttl: float | None = None,
        single_use: bool = True,
        enforcing: bool = True,
    ) -> ExecutionArtifact:
        """Issue a signed artifact for a PERMIT record present in the ledger."""
        if record.decision is not Outcome.PERMIT:
            raise NotPermit(f"record seq={record.seq} decision is {record.decision.value}")
        if not self._store.has_record(tenant, record.seq, record.record_hash):
            raise LedgerMissing(f"record seq={record.seq} not found for {tenant!r}")

        now = self._clock()
        artifact = ExecutionArtifact(
            h_a=record.h_a,
            v_p=record.v_p,
            h_s=record.h_s,
            decision=Outcome.PERMIT,
            valid_from=now,
            valid_until=now + (self._default_ttl if ttl is None else ttl),
            single_use=single_use,
            enforcing=enforcing,
            nonce=secrets.token_bytes(16),
            signature=b"",
        )
        signed = dataclasses.replace(artifact, signature=self._key.sign(artifact.sign_payload()))
        with self._lock:
            self._issuance_log.append(
                {
                    "tenant": tenant,
                    "seq": record.seq,
                    "h_a": record.h_a.hex,
                    "v_p": record.v_p,
                    "nonce": signed.nonce.hex(),
                    "enforcing": enforcing,
                    "issued_at": now,
                }
            )
        self._store.attach_artifact_nonce(tenant, record.seq, signed.nonce.hex())
        return signed

    def revoke(self, nonce: bytes) -> bool:
        """Add a nonce to the revocation list; unknown nonces are a no-op ack.

        Completed executions are unaffected; only future validations see it.
        """
        self.revocations.revoke(nonce)
        return True

    def issuance_log(self) -> list[dict[str, Any]]:
        with self._lock:
            return list(self._issuance_log)

    def validate(
        self,
        artifact: ExecutionArtifact | None,
        presented_h: CanonicalDigest,
        active_v_p: str,
        consumed: Callable[[str], bool],
        now: float | None = None,
    ) -> ValidationResult:
        return validate_artifact(
            artifact,
            presented_h,
            active_v_p,
            self._clock() if now is None else now,
            self.revocations,
            consumed,
            self.verify_key,
        )


def witness_from_entry(entry: Mapping[str, Any]) -> ApprovalWitness:
    return ApprovalWitness(
        h_a=entry["h_a"],
        approver_id=entry["approver_id"],
        verdict=entry["verdict"],
        t=entry["t"],
        signature=bytes.fromhex(entry["signature"]),
    )
