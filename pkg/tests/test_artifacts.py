"""Execution artifacts: issuance, the validation conjuncts, consumption, revocation."""

from __future__ import annotations

import base64
import dataclasses
import secrets
import threading

import pytest
from hypothesis import given, settings, strategies as st

from actiongov.artifacts import (
    ApprovalWitness,
    ApproverRegistry,
    ArtifactService,
    ExecutionArtifact,
    RejectReason,
    RevocationList,
    generate_keypair,
    validate_artifact,
)
from actiongov.encoding import digest_of
from actiongov.errors import InvalidWitnessSignature, LedgerMissing, NotPermit
from actiongov.ledger import LedgerStore
from actiongov.policy import Outcome


@pytest.fixture()
def service(tmp_path):
    key, _ = generate_keypair()
    store = LedgerStore(tmp_path)
    return ArtifactService(key, store, default_ttl=60.0), store


def permit_record(store, n=1):
    return store.append("acme", digest_of(f"a{n}".encode()), "policies:v12",
                        digest_of(b"s"), Outcome.PERMIT, 100, n)


def deny_record(store, n=99):
    return store.append("acme", digest_of(f"a{n}".encode()), "policies:v12",
                        digest_of(b"s"), Outcome.DENY, 100, n)


class TestIssue:
    def test_issue_copies_record_bindings(self, service):
        svc, store = service
        record = permit_record(store)
        artifact = svc.issue("acme", record)
        assert artifact.h_a == record.h_a
        assert artifact.v_p == record.v_p
        assert artifact.h_s == record.h_s
        assert artifact.decision is Outcome.PERMIT
        assert artifact.valid_from <= artifact.valid_until
        svc.verify_key.verify(artifact.signature, artifact.sign_payload())

    def test_deny_record_cannot_be_issued(self, service):
        svc, store = service
        with pytest.raises(NotPermit):
            svc.issue("acme", deny_record(store))

    def test_foreign_record_rejected(self, service):
        svc, store = service
        record = permit_record(store)
        fake = dataclasses.replace(record, record_hash=b"\x11" * 32)
        with pytest.raises(LedgerMissing):
            svc.issue("acme", fake)

    def test_dual_issue_distinct_nonces(self, service):
        svc, store = service
        record = permit_record(store)
        a1 = svc.issue("acme", record)
        a2 = svc.issue("acme", record)
        assert a1.nonce != a2.nonce
        consumed: set[str] = set()
        ok1 = svc.validate(a1, record.h_a, "policies:v12", consumed.__contains__)
        ok2 = svc.validate(a2, record.h_a, "policies:v12", consumed.__contains__)
        assert ok1.accepted and ok2.accepted
        # single-use: consuming the hash invalidates both copies
        consumed.add(record.h_a.hex)
        assert not svc.validate(a1, record.h_a, "policies:v12", consumed.__contains__).accepted
        assert not svc.validate(a2, record.h_a, "policies:v12", consumed.__contains__).accepted

    def test_issuance_is_logged(self, service):
        svc, store = service
        record = permit_record(store)
        artifact = svc.issue("acme", record)
        log = svc.issuance_log()
        assert log and log[-1]["nonce"] == artifact.nonce.hex()
        assert store.artifact_nonces("acme")[record.seq] == [artifact.nonce.hex()]


class TestValidateConjuncts:
    def _issued(self, service):
        svc, store = service
        record = permit_record(store)
        return svc, record, svc.issue("acme", record)

    def test_accepts_fresh_matching_artifact(self, service):
        svc, record, artifact = self._issued(service)
        result = svc.validate(artifact, record.h_a, "policies:v12", lambda _: False)
        assert result.accepted and result.reason is None

    def test_missing_artifact(self, service):
        svc, record, _ = self._issued(service)
        result = svc.validate(None, record.h_a, "policies:v12", lambda _: False)
        assert result.reason is RejectReason.MISSING_OR_BAD_SIGNATURE

    def test_forged_signature(self, service):
        svc, record, artifact = self._issued(service)
        attacker, _ = generate_keypair()
        forged = dataclasses.replace(artifact, signature=attacker.sign(artifact.sign_payload()))
        result = svc.validate(forged, record.h_a, "policies:v12", lambda _: False)
        assert result.reason is RejectReason.MISSING_OR_BAD_SIGNATURE

    def test_replay_against_other_hash(self, service):
        svc, record, artifact = self._issued(service)
        other = digest_of(b"some other action")
        result = svc.validate(artifact, other, "policies:v12", lambda _: False)
        assert result.reason is RejectReason.HASH_MISMATCH

    def test_expired_window(self, service):
        svc, record, artifact = self._issued(service)
        late = artifact.valid_until + 1.0
        result = svc.validate(artifact, record.h_a, "policies:v12", lambda _: False, now=late)
        assert result.reason is RejectReason.EXPIRED

    def test_stale_policy_version(self, service):
        svc, record, artifact = self._issued(service)
        result = svc.validate(artifact, record.h_a, "policies:v13", lambda _: False)
        assert result.reason is RejectReason.STALE_POLICY

    def test_revoked_nonce(self, service):
        svc, record, artifact = self._issued(service)
        svc.revoke(artifact.nonce)
        result = svc.validate(artifact, record.h_a, "policies:v12", lambda _: False)
        assert result.reason is RejectReason.REVOKED

    def test_already_consumed(self, service):
        svc, record, artifact = self._issued(service)
        result = svc.validate(artifact, record.h_a, "policies:v12", lambda _: True)
        assert result.reason is RejectReason.ALREADY_CONSUMED

    def test_non_enforcing_shadow_artifact(self, service):
        svc, store = service
        record = permit_record(store)
        artifact = svc.issue("acme", record, enforcing=False)
        result = svc.validate(artifact, record.h_a, "policies:v12", lambda _: False)
        assert result.reason is RejectReason.NON_ENFORCING


class TestTokenWireForm:
    def test_token_round_trip(self, service):
        svc, store = service
        record = permit_record(store)
        artifact = svc.issue("acme", record)
        parsed = ExecutionArtifact.from_token(artifact.token())
        assert parsed == artifact

    def test_mutated_tokens_never_validate(self, service):
        """Fuzz: flipping any single byte of the wire token cannot validate."""
        svc, store = service
        record = permit_record(store)
        artifact = svc.issue("acme", record)
        raw = base64.urlsafe_b64decode(artifact.token().encode())
        accepted = 0
        for trial in range(10_000):
            data = bytearray(raw)
            data[trial % len(data)] ^= 1 << (trial % 8)
            try:
                mutated = ExecutionArtifact.from_token(
                    base64.urlsafe_b64encode(bytes(data)).decode())
            except Exception:
                continue  # unparseable mutation cannot execute either
            result = svc.validate(mutated, record.h_a, "policies:v12", lambda _: False)
            if result.accepted:
                accepted += 1
        assert accepted == 0

    def test_flipping_any_single_field_never_validates(self, service):
        svc, store = service
        record = permit_record(store)
        artifact = svc.issue("acme", record)
        mutations = [
            {"h_a": digest_of(b"other")},
            {"h_s": digest_of(b"other state")},
            {"v_p": "policies:v13"},
            {"valid_from": artifact.valid_from - 3600.0},
            {"valid_until": artifact.valid_until + 3600.0},
            {"single_use": not artifact.single_use},
            {"enforcing": not artifact.enforcing},
            {"nonce": secrets.token_bytes(16)},
        ]
        for fields in mutations:
            mutated = dataclasses.replace(artifact, **fields)
            result = svc.validate(mutated, record.h_a, "policies:v12", lambda _: False)
            assert not result.accepted, fields
            assert result.reason is RejectReason.MISSING_OR_BAD_SIGNATURE


class TestRevocation:
    def test_revocation_is_monotone(self):
        revocations = RevocationList()
        nonce = secrets.token_bytes(16)
        assert not revocations.is_revoked(nonce)
        revocations.revoke(nonce)
        revocations.revoke(nonce)
        assert revocations.is_revoked(nonce)
        assert len(revocations) == 1

    def test_revoking_unknown_nonce_is_noop_ack(self, service):
        svc, _ = service
        assert svc.revoke(secrets.token_bytes(16)) is True

    def test_revocation_not_retroactive(self, service):
        """Revoking after consumption does not rewrite the consumption."""
        svc, store = service
        record = permit_record(store)
        artifact = svc.issue("acme", record)
        consumed = {record.h_a.hex}
        svc.revoke(artifact.nonce)
        result = svc.validate(artifact, record.h_a, "policies:v12", consumed.__contains__)
        assert not result.accepted
        assert record.h_a.hex in consumed


class TestConcurrentConsumeGate:
    def test_validate_is_pure_given_snapshots(self, service):
        svc, store = service
        record = permit_record(store)
        artifact = svc.issue("acme", record)
        results = [svc.validate(artifact, record.h_a, "policies:v12", lambda _: False)
                   for _ in range(100)]
        assert all(r.accepted for r in results)

    def test_parallel_validation_threads(self, service):
        svc, store = service
        record = permit_record(store)
        artifact = svc.issue("acme", record)
        outcomes = []
        lock = threading.Lock()

        def worker():
            r = svc.validate(artifact, record.h_a, "policies:v12", lambda _: False)
            with lock:
                outcomes.append(r.accepted)

        threads = [threading.Thread(target=worker) for _ in range(32)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert outcomes and all(outcomes)


class TestApprovalWitness:
    def test_witness_signature_verifies(self):
        key, pub = generate_keypair()
        registry = ApproverRegistry()
        registry.register("alice", pub)
        witness = ApprovalWitness.create(key, "ab" * 32, "alice", "approve")
        registry.verify(witness)

    def test_unregistered_approver_rejected(self):
        key, _ = generate_keypair()
        registry = ApproverRegistry()
        witness = ApprovalWitness.create(key, "ab" * 32, "mallory", "approve")
        with pytest.raises(InvalidWitnessSignature):
            registry.verify(witness)

    def test_tampered_witness_rejected(self):
        key, pub = generate_keypair()
        registry = ApproverRegistry()
        registry.register("alice", pub)
        witness = ApprovalWitness.create(key, "ab" * 32, "alice", "reject")
        tampered = dataclasses.replace(witness, verdict="approve")
        with pytest.raises(InvalidWitnessSignature):
            registry.verify(tampered)

    def test_unknown_verdict_rejected(self):
        key, _ = generate_keypair()
        with pytest.raises(ValueError):
            ApprovalWitness.create(key, "ab" * 32, "alice", "maybe")


@given(ttl=st.floats(min_value=0.25, max_value=7200.0, allow_nan=False))
@settings(max_examples=25, deadline=None)
def test_validity_window_is_well_ordered(tmp_path_factory, ttl):
    key, _ = generate_keypair()
    store = LedgerStore(tmp_path_factory.mktemp("ledger"))
    svc = ArtifactService(key, store)
    record = permit_record(store, n=1)
    artifact = svc.issue("acme", record, ttl=ttl)
    assert artifact.valid_from <= artifact.valid_until
    mid = (artifact.valid_from + artifact.valid_until) / 2
    assert svc.validate(artifact, record.h_a, "policies:v12", lambda _: False, now=mid).accepted
