from __future__ import annotations

import pytest

from actiongov.artifacts import ApproverRegistry, generate_keypair
from actiongov.config import default_normalization, demo_policy_program, demo_state_entries
from actiongov.governor import Governor
from actiongov.ledger import LedgerStore


@pytest.fixture()
def norm_config():
    return default_normalization()


@pytest.fixture()
def approver_keys():
    key, pub = generate_keypair()
    return {"alice": (key, pub)}


@pytest.fixture()
def governor_factory(tmp_path, approver_keys):
    """Builds governors backed by per-test ledger dirs; closes them on teardown."""
    built = []

    def _build(tenant="acme", defer_timeout=10.0, fsync=True, program=None, entries=None):
        signing_key, _ = generate_keypair()
        registry = ApproverRegistry()
        for name, (_, pub) in approver_keys.items():
            registry.register(name, pub)
        store = LedgerStore(tmp_path / f"ledger-{len(built)}", fsync=fsync)
        governor = Governor(
            store,
            signing_key,
            default_normalization(),
            approvers=registry,
            default_defer_timeout=defer_timeout,
        )
        governor.register_tenant(
            tenant,
            program or demo_policy_program(tenant),
            demo_state_entries() if entries is None else entries,
        )
        built.append(governor)
        return governor

    yield _build
    for g in built:
        g.close()
