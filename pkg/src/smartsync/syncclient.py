"""Off-chain synchronization orchestrator.

Drives the full workflow against one proxy: replay transactions since
the last synchronized block to find the touched keys, fetch proofs from
the source chain, combine them into a payload, top up the relay when the
target header is missing, and submit.

Two payload construction paths exist and produce identical bytes:
fetching a multi proof directly, or fetching one storage proof per key
and merging them (with content-addressed node fetches filling in the
restructuring siblings single proofs do not carry). When the replay
window is pruned on the source, the diff falls back to comparing the
proxy's own replica against the source state at the target block.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Sequence

from .chainsim import Chain
from .encoding import hash_bytes
from .errors import BlockPruned, EmptyDiff
from .proofs import MultiProof, StateDiff, build_multi_proof
from .proxy import ProxyContract, SyncResult
from .relay import RelayStore
from .trie import NodeStore, Trie
from .wire import SyncPayload


class FetchingNodeStore(NodeStore):
    """Node store that fills misses through a content-addressed fetch."""

    __slots__ = ("_fetch", "fetched")

    def __init__(self, fetch: Callable[[bytes], bytes]):
        super().__init__()
        self._fetch = fetch
        self.fetched = 0

    def encoding(self, digest: bytes) -> Optional[bytes]:
        encoding = super().encoding(digest)
        if encoding is None:
            encoding = self._fetch(digest)
            self.fetched += 1
            self.put(digest, encoding)
        return encoding


@dataclass(frozen=True)
class SyncPlan:
    source_block: int
    touched_keys: tuple[bytes, ...]
    diff: StateDiff
    payload: SyncPayload


@dataclass(frozen=True)
class SyncOutcome:
    status: str  # "applied" | "noop"
    plan: Optional[SyncPlan]
    result: Optional[SyncResult]


class SyncClient:
    def __init__(self, chain: Chain, relay: RelayStore):
        self.chain = chain
        self.relay = relay

    # --- diff computation ----------------------------------------------------

    def compute_diff(self, address: bytes, from_block: int, to_block: int) -> StateDiff:
        """Net effect of replaying all batches in (from_block, to_block]:
        per key (first old value, last new value); no-net-change keys drop."""
        batches = self.chain.get_transactions(address, from_block, to_block)
        net: dict[bytes, Optional[bytes]] = {}
        for batch in batches:
            for key, value in batch.ops:
                net[key] = value
        changes = {}
        for key, new_value in net.items():
            old_value = self.chain.get_storage_value(from_block, address, key)
            changes[key] = (old_value, new_value)
        return StateDiff.from_changes(changes)

    def compute_diff_from_state(
        self,
        current_entries: Mapping[bytes, bytes],
        address: bytes,
        to_block: int,
    ) -> StateDiff:
        """Fallback for pruned replay windows: compare a replica's entries
        against the source state at the target block."""
        target = dict(self.chain.storage_entries(to_block, address))
        changes = {}
        for key in set(current_entries) | set(target):
            changes[key] = (current_entries.get(key), target.get(key))
        return StateDiff.from_changes(changes)

    # --- payload assembly --------------------------------------------------------

    def build_sync_payload(
        self,
        address: bytes,
        to_block: int,
        diff: StateDiff,
        *,
        via_single_proofs: bool = False,
    ) -> SyncPayload:
        if diff.is_empty():
            raise EmptyDiff("nothing to synchronize")
        account_proof = self.chain.get_account_proof(to_block, address)
        keys = diff.keys()
        if via_single_proofs:
            multi_proof = self._merge_single_proofs(address, to_block, keys)
        else:
            multi_proof = self.chain.get_storage_multi_proof(to_block, address, keys)
        return SyncPayload(to_block, account_proof, multi_proof)

    def _merge_single_proofs(
        self, address: bytes, to_block: int, keys: Sequence[bytes]
    ) -> MultiProof:
        """Combine per-key storage proofs into one multi proof; sibling nodes
        needed for restructuring are fetched by hash on demand."""
        store = FetchingNodeStore(self.chain.get_trie_node)
        for key in keys:
            single = self.chain.get_storage_proof(to_block, address, key)
            for encoding in single.nodes:
                store.put(hash_bytes(encoding), encoding)
        root = self.chain.get_storage_root(to_block, address)
        view = Trie.at_root(store, root)
        return build_multi_proof(view, keys)

    # --- end-to-end drivers ----------------------------------------------------------

    def run_sync(
        self,
        proxy: ProxyContract,
        to_block: int,
        *,
        withhold: Sequence[bytes] = (),
        via_single_proofs: bool = False,
    ) -> SyncOutcome:
        """Fig-style workflow: diff, proofs, relay top-up, submission.

        Returns "noop" when nothing changed; proxy rejections propagate as
        exceptions. `withhold` drops keys from the submitted payload (an
        attack harness; an honest proxy must reject the result).
        """
        address = proxy.source_address
        from_block = proxy.last_synced_block
        if from_block is None:
            raise EmptyDiff("proxy is not sealed; fork the contract first")
        try:
            diff = self.compute_diff(address, from_block, to_block)
        except BlockPruned:
            diff = self.compute_diff_from_state(
                dict(proxy.storage.items()), address, to_block
            )
        if diff.is_empty():
            return SyncOutcome("noop", None, None)
        submitted = diff.without(withhold) if withhold else diff
        if submitted.is_empty():
            raise EmptyDiff("all changed keys were withheld")
        if to_block not in self.relay:
            self.relay.submit_header(self.chain.get_header(to_block))
        payload = self.build_sync_payload(
            address, to_block, submitted, via_single_proofs=via_single_proofs
        )
        result = proxy.synchronize(payload)
        plan = SyncPlan(to_block, submitted.keys(), submitted, payload)
        return SyncOutcome("applied", plan, result)

    def fork_contract(
        self,
        address: bytes,
        at_block: int,
        proxy: ProxyContract,
        *,
        chunk_size: int = 256,
    ) -> None:
        """Replicate a contract's full state at a block into the proxy in
        chunks, then seal it against an account proof."""
        entries = self.chain.storage_entries(at_block, address)
        for start in range(0, len(entries), chunk_size):
            proxy.init_migration(entries[start:start + chunk_size])
        if at_block not in self.relay:
            self.relay.submit_header(self.chain.get_header(at_block))
        proof = self.chain.get_account_proof(at_block, address)
        proxy.finalize_migration(proof, proxy.storage.root_hash())
