"""Hash-chained ledger: append, verification, tamper evidence, projection."""

from __future__ import annotations

import json
import struct

import pytest

from actiongov.encoding import CanonicalDigest, digest_of
from actiongov.errors import NotFound
from actiongov.ledger import DecisionRecord, LedgerStore, record_hash_of
from actiongov.policy import Outcome

from oracle_encoding import oracle_record_hash

ZERO = "00" * 32


def h(i: int) -> CanonicalDigest:
    return digest_of(f"object-{i}".encode())


def fill(store: LedgerStore, tenant: str, n: int) -> list[DecisionRecord]:
    outcomes = [Outcome.PERMIT, Outcome.DEFER, Outcome.DENY]
    return [
        store.append(tenant, h(i), "policies:v12", h(1000 + i), outcomes[i % 3], 1_737_169_200 + i, i + 1)
        for i in range(n)
    ]


class TestAppend:
    def test_genesis_links_to_zero_bytes(self, tmp_path):
        store = LedgerStore(tmp_path)
        record = fill(store, "acme", 1)[0]
        assert record.prev_hash == b"\x00" * 32
        assert record.seq == 1

    def test_chain_links_and_monotone_seq(self, tmp_path):
        store = LedgerStore(tmp_path)
        records = fill(store, "acme", 5)
        for prev, cur in zip(records, records[1:]):
            assert cur.prev_hash == prev.record_hash
            assert cur.seq == prev.seq + 1

    def test_trace_shaped_record_round_trips(self, tmp_path):
        """A record carrying the canonical tuple fields persists and re-reads."""
        store = LedgerStore(tmp_path)
        record = store.append(
            "acme", h(17), "policies:v12", h(1017), Outcome.DEFER, 1_737_169_200, 17
        )
        read_back = list(store.read_records("acme"))[-1]
        assert read_back == record
        assert read_back.decision is Outcome.DEFER

    def test_hashes_match_independent_recomputation(self, tmp_path):
        store = LedgerStore(tmp_path)
        records = fill(store, "acme", 3)
        prev = ZERO
        for r in records:
            expected = oracle_record_hash(
                r.seq, r.h_a.hex, r.v_p, r.h_s.hex, r.decision.value, r.ts, r.lc, prev
            )
            assert r.record_hash.hex() == expected
            assert r.prev_hash.hex() == prev
            prev = expected

    def test_record_hash_of_is_deterministic(self):
        a = record_hash_of(1, h(1), "v", h(2), Outcome.PERMIT, 10, 1, b"\x00" * 32)
        b = record_hash_of(1, h(1), "v", h(2), Outcome.PERMIT, 10, 1, b"\x00" * 32)
        c = record_hash_of(1, h(1), "v", h(2), Outcome.DENY, 10, 1, b"\x00" * 32)
        assert a == b != c

    def test_tail_recovered_after_reopen(self, tmp_path):
        store = LedgerStore(tmp_path)
        fill(store, "acme", 3)
        reopened = LedgerStore(tmp_path)
        record = reopened.append("acme", h(9), "policies:v12", h(1009), Outcome.DENY, 1, 9)
        assert record.seq == 4
        assert reopened.verify_chain("acme").ok


def _rows_path(store: LedgerStore, tenant: str):
    return store.root / tenant / "records.log"


def _rewrite_rows(store: LedgerStore, tenant: str, rows: list[dict]) -> None:
    path = _rows_path(store, tenant)
    with open(path, "wb") as fh:
        for row in rows:
            body = json.dumps(row, sort_keys=True, separators=(",", ":")).encode()
            fh.write(struct.pack(">I", len(body)))
            fh.write(body)


class TestTamperEvidence:
    def test_untouched_ledger_verifies(self, tmp_path):
        store = LedgerStore(tmp_path)
        fill(store, "acme", 50)
        report = store.verify_chain("acme")
        assert report.ok is True
        assert report.first_broken_seq is None
        assert report.records_checked == 50

    def test_flipping_decision_byte_detected_at_seq(self, tmp_path):
        store = LedgerStore(tmp_path)
        fill(store, "acme", 20)
        rows = list(store.read_rows("acme"))
        rows[6]["decision"] = "DENY" if rows[6]["decision"] != "DENY" else "PERMIT"
        _rewrite_rows(store, "acme", rows)
        fresh = LedgerStore(tmp_path)
        report = fresh.verify_chain("acme")
        assert report.ok is False
        assert report.first_broken_seq == 7
        assert report.records_checked == 7

    def test_deleting_record_detected_at_gap(self, tmp_path):
        store = LedgerStore(tmp_path)
        fill(store, "acme", 20)
        rows = list(store.read_rows("acme"))
        del rows[9]  # drop seq 10, re-stitch the file
        _rewrite_rows(store, "acme", rows)
        report = LedgerStore(tmp_path).verify_chain("acme")
        assert report.ok is False
        assert report.first_broken_seq == 10

    def test_reordering_records_detected_at_first_displacement(self, tmp_path):
        store = LedgerStore(tmp_path)
        fill(store, "acme", 20)
        rows = list(store.read_rows("acme"))
        rows[4], rows[11] = rows[11], rows[4]
        _rewrite_rows(store, "acme", rows)
        report = LedgerStore(tmp_path).verify_chain("acme")
        assert report.ok is False
        assert report.first_broken_seq == 5

    def test_truncated_file_reported_not_raised(self, tmp_path):
        store = LedgerStore(tmp_path)
        fill(store, "acme", 5)
        path = _rows_path(store, "acme")
        path.write_bytes(path.read_bytes()[:-7])
        report = LedgerStore(tmp_path).verify_chain("acme")
        assert report.ok is False


class TestProjection:
    def test_observation_omits_artifact_nonces(self, tmp_path):
        store = LedgerStore(tmp_path)
        records = fill(store, "acme", 3)
        store.attach_artifact_nonce("acme", 2, "ab" * 16)
        internal = store.internal_row("acme", 2)
        assert internal["artifact_nonces"] == ["ab" * 16]
        obs = store.project_by_seq("acme", 2)
        assert "artifact_nonces" not in obs.to_dict()
        assert obs.h_a == records[1].h_a.hex
        assert obs.decision == records[1].decision.value

    def test_genesis_projection_preserves_zero_prev(self, tmp_path):
        store = LedgerStore(tmp_path)
        fill(store, "acme", 1)
        obs = store.project_by_seq("acme", 1)
        assert obs.prev_hash == ZERO

    def test_projection_is_byte_stable(self, tmp_path):
        store = LedgerStore(tmp_path)
        fill(store, "acme", 4)
        first = list(store.export_lines("acme"))
        second = list(store.export_lines("acme"))
        assert first == second

    def test_export_then_independent_verify(self, tmp_path):
        """The exported stream carries enough to re-verify the chain."""
        store = LedgerStore(tmp_path)
        fill(store, "acme", 25)
        prev = ZERO
        for line in store.export_lines("acme"):
            obs = json.loads(line)
            assert obs["prev"] == prev
            recomputed = oracle_record_hash(
                obs["seq"], obs["h_a"], obs["v_p"], obs["h_s"],
                obs["decision"], obs["ts"], obs["lc"], obs["prev"],
            )
            assert recomputed == obs["record_hash"]
            prev = obs["record_hash"]

    def test_project_missing_record(self, tmp_path):
        store = LedgerStore(tmp_path)
        fill(store, "acme", 1)
        with pytest.raises(NotFound):
            store.project_by_seq("acme", 99)


class TestSideStores:
    def test_blob_round_trip_and_content_addressing(self, tmp_path):
        store = LedgerStore(tmp_path)
        digest = digest_of(b"payload")
        store.put_action_bytes("acme", digest, b"payload")
        assert store.get_action_bytes("acme", digest.hex) == b"payload"
        store.put_action_bytes("acme", digest, b"different")  # first write wins
        assert store.get_action_bytes("acme", digest.hex) == b"payload"

    def test_policy_source_round_trip(self, tmp_path):
        store = LedgerStore(tmp_path)
        store.put_policy_source("acme", "policies:v12", {"version_id": "policies:v12", "rules": []})
        assert store.get_policy_source("acme", "policies:v12")["version_id"] == "policies:v12"

    def test_tenant_streams_are_disjoint(self, tmp_path):
        store = LedgerStore(tmp_path)
        fill(store, "acme", 3)
        fill(store, "beta", 2)
        assert store.count("acme") == 3
        assert store.count("beta") == 2
        assert store.verify_chain("acme").ok and store.verify_chain("beta").ok
