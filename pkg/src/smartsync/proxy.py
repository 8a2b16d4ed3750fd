"""Target-side verifier and state holder.

The proxy accepts a forked state in chunks, seals it against an account
proof anchored in the relay, and from then on mutates only through
`synchronize`, which verifies a payload end to end before touching
storage:

1. relay root lookup
2. account proof -> new storage root
3. multi proof -> proven value map
4. transition confirmation over the currently stored values
5. confirmation root must equal the current storage root
6. apply creates/updates/deletes
7. advance the storage root and last synchronized block
8. emit a cost report

Verification is pure over (payload bytes, relay roots, current storage):
there are no caller identity checks, and every failure aborts before any
write, so a rejected call never moves the storage root.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from .chainsim import AccountProof, verify_account_proof
from .costmeter import CostReport
from .encoding import hash_invocation_count, is_canonical_value, to_hex
from .errors import (
    AccountProofInvalid,
    AlreadySealed,
    CodeHashMismatch,
    IncompleteTransition,
    MultiProofInvalid,
    NotSealed,
    PayloadTooLarge,
    ProofRejected,
    RootDivergence,
    StaleSync,
)
from .proofs import DiffEntry, StateDiff, compute_transition_confirmation, verify_multi_proof
from .relay import RelayStore
from .trie import Trie
from .wire import SyncPayload, encode_sync_payload

DEFAULT_MAX_PAYLOAD_BYTES = 1 << 20


@dataclass(frozen=True)
class SyncResult:
    source_block: int
    new_root: bytes
    diff: StateDiff
    report: CostReport


class ProxyContract:
    """Replica of one source contract's key-value state."""

    def __init__(
        self,
        source_address: bytes,
        relay: RelayStore,
        *,
        max_payload_bytes: int = DEFAULT_MAX_PAYLOAD_BYTES,
        strict_code_hash: bool = False,
        expected_code_hash: Optional[bytes] = None,
    ):
        self.source_address = source_address
        self.relay = relay
        self.storage = Trie()
        self.max_payload_bytes = max_payload_bytes
        self.strict_code_hash = strict_code_hash
        self.expected_code_hash = expected_code_hash
        self.migration_sealed = False
        self.current_storage_root: Optional[bytes] = None
        self.last_synced_block: Optional[int] = None
        self.cost_log: list[CostReport] = []

    # --- initialization ---------------------------------------------------

    def init_migration(self, entries: Iterable[tuple[bytes, bytes]]) -> None:
        """Load one chunk of the forked state; callable any number of times
        until the migration is sealed."""
        if self.migration_sealed:
            raise AlreadySealed("state was already replicated and sealed")
        for key, value in entries:
            self.storage.insert(key, value)

    def finalize_migration(self, source_proof: AccountProof, local_root: bytes) -> None:
        """Seal iff the account proof verifies against the relayed global
        root and its storage root equals the locally recomputed one."""
        if self.migration_sealed:
            raise AlreadySealed("migration already finalized")
        global_root = self.relay.get_state_root(source_proof.block_number)
        if source_proof.address != self.source_address:
            raise AccountProofInvalid("account proof is for a different address")
        try:
            account = verify_account_proof(global_root, source_proof)
        except ProofRejected as exc:
            raise AccountProofInvalid(str(exc)) from None
        if account is None:
            raise AccountProofInvalid("account absent from the source global state")
        actual_root = self.storage.root_hash()
        if not (account.storage_root == actual_root == local_root):
            raise RootDivergence(
                f"proven {to_hex(account.storage_root)}, local {to_hex(actual_root)}, "
                f"claimed {to_hex(local_root)}"
            )
        if self.strict_code_hash:
            expected = self.expected_code_hash
            if expected is not None and account.code_hash != expected:
                raise CodeHashMismatch(to_hex(account.code_hash))
        self.migration_sealed = True
        self.current_storage_root = actual_root
        self.last_synced_block = source_proof.block_number

    # --- synchronization -------------------------------------------------------

    def synchronize(self, payload: SyncPayload) -> SyncResult:
        if not self.migration_sealed:
            raise NotSealed("synchronize requires a sealed migration")
        if payload.source_block_number <= self.last_synced_block:
            raise StaleSync(
                f"block {payload.source_block_number} does not succeed "
                f"{self.last_synced_block}"
            )
        payload_bytes = len(encode_sync_payload(payload))
        if payload_bytes > self.max_payload_bytes:
            raise PayloadTooLarge(
                f"{payload_bytes} bytes exceed the {self.max_payload_bytes} byte limit; "
                "synchronize an earlier state subsuming fewer transactions first"
            )
        hashes_before = hash_invocation_count()

        global_root = self.relay.get_state_root(payload.source_block_number)
        account_proof = payload.account_proof
        if account_proof.address != self.source_address:
            raise AccountProofInvalid("account proof is for a different address")
        if account_proof.block_number != payload.source_block_number:
            raise AccountProofInvalid("account proof height differs from the payload height")
        try:
            account = verify_account_proof(global_root, account_proof)
        except ProofRejected as exc:
            raise AccountProofInvalid(str(exc)) from None
        if account is None:
            raise AccountProofInvalid("account absent from the source global state")
        new_root = account.storage_root

        multi_proof = payload.multi_proof
        try:
            proven = verify_multi_proof(new_root, multi_proof)
        except ProofRejected as exc:
            raise MultiProofInvalid(str(exc)) from None
        for value in proven.values():
            if value is not None and not is_canonical_value(value):
                raise MultiProofInvalid("proven value is not canonical")

        current = {key: self.storage.get(key) for key in multi_proof.keys}
        confirmation = compute_transition_confirmation(multi_proof, current)
        if confirmation.computed_root != self.current_storage_root:
            raise IncompleteTransition(
                f"confirmation root {to_hex(confirmation.computed_root)} does not "
                f"reproduce {to_hex(self.current_storage_root)}"
            )

        # All checks passed; apply on a snapshot and swap in atomically.
        scratch = self.storage.copy()
        changes: list[DiffEntry] = []
        for key in multi_proof.keys:
            old_value = current[key]
            new_value = proven[key]
            if old_value == new_value:
                continue
            if new_value is None:
                scratch.delete(key)
            else:
                scratch.insert(key, new_value)
            changes.append(DiffEntry(key, old_value, new_value))
        applied_root = scratch.root_hash()
        if applied_root != new_root:
            raise MultiProofInvalid(
                "applied updates do not reproduce the proven storage root"
            )
        self.storage = scratch
        self.current_storage_root = new_root
        self.last_synced_block = payload.source_block_number

        report = CostReport(
            payload_bytes=payload_bytes,
            hash_invocations=hash_invocation_count() - hashes_before,
            nodes_verified=len(account_proof.nodes) + len(multi_proof.entries),
            storage_writes=len(changes),
            touched_keys=len(multi_proof.keys),
        )
        self.cost_log.append(report)
        return SyncResult(
            source_block=payload.source_block_number,
            new_root=new_root,
            diff=StateDiff(tuple(changes)),
            report=report,
        )

    # --- queries ----------------------------------------------------------------

    def query(self, key: bytes) -> Optional[bytes]:
        """Read-only state access; never mutates."""
        if not self.migration_sealed:
            raise NotSealed("query requires a sealed migration")
        return self.storage.get(key)

    # --- persistence (CLI state files) --------------------------------------------

    def to_state(self) -> dict:
        root = self.storage.root_hash()
        return {
            "source_address": to_hex(self.source_address),
            "sealed": self.migration_sealed,
            "last_synced_block": self.last_synced_block,
            "current_storage_root": to_hex(root),
            "max_payload_bytes": self.max_payload_bytes,
            "strict_code_hash": self.strict_code_hash,
            "entries": [[to_hex(k), to_hex(v)] for k, v in self.storage.items()],
        }

    @classmethod
    def from_state(cls, state: dict, relay: RelayStore) -> "ProxyContract":
        proxy = cls(
            source_address=bytes.fromhex(state["source_address"][2:]),
            relay=relay,
            max_payload_bytes=state.get("max_payload_bytes", DEFAULT_MAX_PAYLOAD_BYTES),
            strict_code_hash=state.get("strict_code_hash", False),
        )
        for key_hex, value_hex in state["entries"]:
            proxy.storage.insert(bytes.fromhex(key_hex[2:]), bytes.fromhex(value_hex[2:]))
        restored_root = proxy.storage.root_hash()
        recorded = state.get("current_storage_root")
        if recorded is not None and restored_root != bytes.fromhex(recorded[2:]):
            raise RootDivergence("state file entries do not reproduce the recorded root")
        if state.get("sealed"):
            proxy.migration_sealed = True
            proxy.current_storage_root = restored_root
            proxy.last_synced_block = state["last_synced_block"]
        return proxy
