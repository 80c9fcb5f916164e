"""Exception types shared across the governor stack.

Fail-closed boundaries deliberately convert most of these into DENY decisions
rather than letting them escape; the exceptions exist so that conversion
points are explicit and testable.
"""

from __future__ import annotations


class ActionGovError(Exception):
    """Base class for all package errors."""


# --- canonicalizer -------------------------------------------------------

class CanonicalizationError(ActionGovError):
    """A proposal could not be normalized into a canonical action."""


class MalformedPayload(CanonicalizationError):
    """Raw payload is not a finite tree of string-keyed values."""


class UnknownOperation(CanonicalizationError):
    """Operation verb (post-alias) is not in the configured vocabulary."""


class MissingRequiredField(CanonicalizationError):
    """No operation or resource could be derived from the payload."""


class ConfigError(ActionGovError):
    """Normalization or deployment configuration is invalid."""


# --- policy engine -------------------------------------------------------

class TenantMismatch(ActionGovError):
    """Policy program and state snapshot belong to different tenants."""


class UnregisteredTenant(ActionGovError):
    """No runtime exists for the named tenant."""


class PolicyError(ActionGovError):
    """Policy source could not be parsed or compiled."""


# --- ledger --------------------------------------------------------------

class StorageFailure(ActionGovError):
    """A record could not be durably persisted; the decision is unrendered."""


class NotFound(ActionGovError):
    """Requested record, blob, or policy version does not exist."""


# --- artifacts / approvals ----------------------------------------------

class NotPermit(ActionGovError):
    """Artifact issuance requested for a record whose decision is not PERMIT."""


class LedgerMissing(ActionGovError):
    """Artifact issuance requested for a record absent from the ledger."""


class NoPermitDecision(ActionGovError):
    """consume() called for a hash with no finalized PERMIT decision."""


class UnknownHash(ActionGovError):
    """No deferred or finalized decision is known for the given hash."""


class InvalidWitnessSignature(ActionGovError):
    """Approval witness signature failed verification."""


# --- replay --------------------------------------------------------------

class UnresolvableReference(ActionGovError):
    """A replay input (h_A, v_P, or h_S) could not be resolved to bytes."""


class IntegrityMismatch(ActionGovError):
    """Stored bytes do not hash to the digest recorded in the ledger."""
