"""Execution-time authorization control plane for agent actions.

Every effectful action proposal is canonicalized into a stable byte form,
deterministically evaluated against versioned policies and state snapshots,
recorded in a hash-chained per-tenant ledger, and (when permitted) bound to a
signed single-use execution artifact that executors verify before producing
any side effect. Deferred decisions wait on signed human approvals; recorded
history replays under counterfactual policies without re-executing anything.
"""

from .canonical import (
    CanonicalAction,
    IntentProposal,
    NormalizationConfig,
    canonicalize,
    encode,
)
from .encoding import CanonicalDigest, digest_of
from .errors import ActionGovError
from .governor import CommitOutcome, ConsumeResult, Governor, GovernorMode
from .ledger import DecisionRecord, LedgerStore, Observation, VerificationReport
from .policy import Decision, Outcome, PolicyProgram, Rule, StateSnapshot, evaluate, state_digest
from .replay import FlipReport, ReplayEngine, ReplayQuery

__version__ = "0.1.0"

__all__ = [
    "ActionGovError",
    "CanonicalAction",
    "CanonicalDigest",
    "CommitOutcome",
    "ConsumeResult",
    "Decision",
    "DecisionRecord",
    "FlipReport",
    "Governor",
    "GovernorMode",
    "IntentProposal",
    "LedgerStore",
    "NormalizationConfig",
    "Observation",
    "Outcome",
    "PolicyProgram",
    "ReplayEngine",
    "ReplayQuery",
    "Rule",
    "StateSnapshot",
    "VerificationReport",
    "canonicalize",
    "digest_of",
    "encode",
    "evaluate",
    "state_digest",
]
