"""Verifiable key-value state replication between simulated chains.

A source chain's contract storage is replicated into a target-side proxy
and kept in sync through account proofs, pruned-subtree multi proofs and
transition confirmations that reject any payload withholding part of a
state transition.
"""

from .chainsim import (
    AccountProof,
    AccountTuple,
    BlockHeader,
    Chain,
    GenesisAccount,
    WriteBatch,
    verify_account_proof,
)
from .costmeter import CostReport
from .errors import SmartSyncError
from .proofs import (
    DiffEntry,
    MultiProof,
    StateDiff,
    StorageProof,
    TransitionConfirmation,
    build_multi_proof,
    compute_transition_confirmation,
    prove,
    verify_multi_proof,
    verify_proof,
)
from .proxy import ProxyContract, SyncResult
from .relay import RelayStore
from .syncclient import SyncClient, SyncOutcome, SyncPlan
from .trie import Branch, Extension, Leaf, NodeStore, Trie
from .wire import SyncPayload, decode_sync_payload, encode_sync_payload

__version__ = "0.1.0"

__all__ = [
    "AccountProof",
    "AccountTuple",
    "BlockHeader",
    "Branch",
    "Chain",
    "CostReport",
    "DiffEntry",
    "Extension",
    "GenesisAccount",
    "Leaf",
    "MultiProof",
    "NodeStore",
    "ProxyContract",
    "RelayStore",
    "SmartSyncError",
    "StateDiff",
    "StorageProof",
    "SyncClient",
    "SyncOutcome",
    "SyncPayload",
    "SyncPlan",
    "SyncResult",
    "TransitionConfirmation",
    "Trie",
    "WriteBatch",
    "build_multi_proof",
    "compute_transition_confirmation",
    "decode_sync_payload",
    "encode_sync_payload",
    "prove",
    "verify_account_proof",
    "verify_multi_proof",
    "verify_proof",
]
