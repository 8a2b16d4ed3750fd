"""Minimal source-blockchain simulator.

Accounts hold storage tries; transactions are ordered write batches (a
missing new value means delete); each block refreshes the touched
accounts' storage roots inside a global account trie and appends a
header carrying the global state root. Proof extraction works at any
retained height because all trie nodes live in one append-only
content-addressed store.

Consensus is not modeled: headers are valid by construction and blocks
are produced by a single writer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .encoding import (
    encode_bytes,
    encode_list,
    hash_bytes,
    min_be,
    read_varint,
    to_hex,
)
from .errors import BlockPruned, CorruptNode, MalformedWire, UnknownAccount
from .proofs import MultiProof, StorageProof, build_multi_proof, prove, verify_proof
from .trie import NodeStore, Trie

ADDRESS_LEN = 20
GENESIS_TIMESTAMP = 1_600_000_000
BLOCK_INTERVAL = 12
ZERO_HASH = b"\x00" * 32


@dataclass(frozen=True)
class AccountTuple:
    """(address, nonce, balance, storageRoot, codeHash); the trie stores the
    four non-address fields keyed by address."""

    address: bytes
    nonce: int
    balance: int
    storage_root: bytes
    code_hash: bytes

    def encode(self) -> bytes:
        return encode_list([
            encode_bytes(min_be(self.nonce)),
            encode_bytes(min_be(self.balance)),
            encode_bytes(self.storage_root),
            encode_bytes(self.code_hash),
        ])

    @classmethod
    def decode(cls, data: bytes, address: bytes) -> "AccountTuple":
        try:
            if not data or data[0] != 0xC0:
                raise ValueError("account encoding must be a list")
            count, pos = read_varint(data, 1)
            if count != 4:
                raise ValueError("account encoding must have 4 items")
            fields = []
            for _ in range(4):
                length, pos = read_varint(data, pos)
                end = pos + length
                if end > len(data):
                    raise ValueError("truncated account field")
                fields.append(data[pos:end])
                pos = end
            if pos != len(data):
                raise ValueError("trailing bytes after account encoding")
            if len(fields[2]) != 32 or len(fields[3]) != 32:
                raise ValueError("account hashes must be 32 bytes")
        except ValueError as exc:
            raise MalformedWire(f"account tuple: {exc}") from None
        return cls(
            address=address,
            nonce=int.from_bytes(fields[0], "big"),
            balance=int.from_bytes(fields[1], "big"),
            storage_root=fields[2],
            code_hash=fields[3],
        )


@dataclass(frozen=True)
class BlockHeader:
    number: int
    parent_hash: bytes
    global_state_root: bytes
    timestamp: int

    def encode(self) -> bytes:
        return encode_list([
            encode_bytes(min_be(self.number)),
            encode_bytes(self.parent_hash),
            encode_bytes(self.global_state_root),
            encode_bytes(min_be(self.timestamp)),
        ])

    def header_hash(self) -> bytes:
        return hash_bytes(self.encode())


@dataclass
class WriteBatch:
    """A transaction reduced to its storage effect: ordered (key, value)
    writes against one target account; value None deletes."""

    target: bytes
    ops: tuple[tuple[bytes, Optional[bytes]], ...]
    block_number: Optional[int] = None


@dataclass(frozen=True)
class AccountProof:
    """Inclusion (or non-inclusion) path of an account in the global trie."""

    block_number: int
    address: bytes
    account: Optional[AccountTuple]
    nodes: tuple[bytes, ...]

    def to_storage_proof(self) -> StorageProof:
        value = self.account.encode() if self.account is not None else None
        return StorageProof(self.address, value, self.nodes)


def verify_account_proof(global_root: bytes, proof: AccountProof) -> Optional[AccountTuple]:
    """Verify the account path against a block's global state root."""
    verify_proof(global_root, proof.to_storage_proof())
    return proof.account


@dataclass
class GenesisAccount:
    balance: int = 0
    nonce: int = 0
    storage: Mapping[bytes, bytes] = field(default_factory=dict)


class Chain:
    """Single-writer chain: serialized block production, concurrent reads of
    committed blocks are safe."""

    def __init__(
        self,
        genesis_accounts: Mapping[bytes, GenesisAccount],
        *,
        retention: Optional[int] = None,
    ):
        self.store = NodeStore()
        self.retention = retention
        self._storage: dict[bytes, Trie] = {}
        self._accounts: dict[bytes, AccountTuple] = {}
        self._global = Trie(store=self.store, canonical=False)
        for address, genesis in genesis_accounts.items():
            if len(address) != ADDRESS_LEN:
                raise ValueError(f"addresses are {ADDRESS_LEN} bytes")
            trie = Trie.from_entries(genesis.storage, store=self.store)
            account = AccountTuple(
                address=address,
                nonce=genesis.nonce,
                balance=genesis.balance,
                storage_root=trie.root_hash(),
                code_hash=hash_bytes(b"code:" + address),
            )
            self._storage[address] = trie
            self._accounts[address] = account
            self._global.insert(address, account.encode())
        genesis = BlockHeader(
            number=0,
            parent_hash=ZERO_HASH,
            global_state_root=self._global.root_hash(),
            timestamp=GENESIS_TIMESTAMP,
        )
        self._headers: list[BlockHeader] = [genesis]
        self._batches: list[list[WriteBatch]] = [[]]
        self._storage_roots: list[dict[bytes, bytes]] = [
            {a: t.root_hash() for a, t in self._storage.items()}
        ]

    # --- block production -------------------------------------------------

    @property
    def head(self) -> BlockHeader:
        return self._headers[-1]

    @property
    def height(self) -> int:
        return self.head.number

    def accounts(self) -> tuple[bytes, ...]:
        return tuple(sorted(self._accounts))

    def apply_block(self, batches: Sequence[WriteBatch]) -> BlockHeader:
        """Apply the batches in order, refresh storage roots and the global
        trie, and append a header. Unknown targets abort before any write."""
        for batch in batches:
            if batch.target not in self._accounts:
                raise UnknownAccount(to_hex(batch.target))
        number = self.height + 1
        touched: set[bytes] = set()
        for batch in batches:
            batch.block_number = number
            trie = self._storage[batch.target]
            for key, value in batch.ops:
                if value is None:
                    trie.delete(key)
                else:
                    trie.insert(key, value)
            touched.add(batch.target)
        for address in sorted(touched):
            account = self._accounts[address]
            refreshed = AccountTuple(
                address=address,
                nonce=account.nonce,
                balance=account.balance,
                storage_root=self._storage[address].root_hash(),
                code_hash=account.code_hash,
            )
            self._accounts[address] = refreshed
            self._global.insert(address, refreshed.encode())
        header = BlockHeader(
            number=number,
            parent_hash=self.head.header_hash(),
            global_state_root=self._global.root_hash(),
            timestamp=GENESIS_TIMESTAMP + BLOCK_INTERVAL * number,
        )
        self._headers.append(header)
        self._batches.append(list(batches))
        self._storage_roots.append({a: t.root_hash() for a, t in self._storage.items()})
        return header

    # --- retained-history access ---------------------------------------------

    def _oldest_retained(self) -> int:
        if self.retention is None:
            return 0
        return max(0, self.height - self.retention + 1)

    def _check_retained(self, number: int) -> None:
        if number < 0 or number > self.height:
            raise ValueError(f"block {number} does not exist (head is {self.height})")
        if number < self._oldest_retained():
            raise BlockPruned(f"block {number} is older than the retention window")

    def get_header(self, number: int) -> BlockHeader:
        self._check_retained(number)
        return self._headers[number]

    def _account_at(self, number: int, address: bytes) -> Optional[AccountTuple]:
        root = self._headers[number].global_state_root
        view = Trie.at_root(self.store, root, canonical=False)
        encoded = view.get(address)
        if encoded is None:
            return None
        return AccountTuple.decode(encoded, address)

    def get_account_proof(self, number: int, address: bytes) -> AccountProof:
        self._check_retained(number)
        root = self._headers[number].global_state_root
        view = Trie.at_root(self.store, root, canonical=False)
        single = prove(view, address)
        account = self._account_at(number, address)
        return AccountProof(number, address, account, single.nodes)

    def get_storage_root(self, number: int, address: bytes) -> bytes:
        self._check_retained(number)
        roots = self._storage_roots[number]
        if address not in roots:
            raise UnknownAccount(to_hex(address))
        return roots[address]

    def _storage_at(self, number: int, address: bytes) -> Trie:
        return Trie.at_root(self.store, self.get_storage_root(number, address))

    def get_storage_proof(self, number: int, address: bytes, key: bytes) -> StorageProof:
        return prove(self._storage_at(number, address), key)

    def get_storage_multi_proof(
        self, number: int, address: bytes, keys: Sequence[bytes]
    ) -> MultiProof:
        return build_multi_proof(self._storage_at(number, address), keys)

    def get_storage_value(self, number: int, address: bytes, key: bytes) -> Optional[bytes]:
        return self._storage_at(number, address).get(key)

    def storage_entries(self, number: int, address: bytes) -> list[tuple[bytes, bytes]]:
        """All (key, value) pairs of an account's storage at a block."""
        return list(self._storage_at(number, address).items())

    def get_transactions(self, address: bytes, from_block: int, to_block: int) -> list[WriteBatch]:
        """Batches targeting `address` in blocks (from_block, to_block],
        block order preserved: replaying them over the state at from_block
        reproduces the state at to_block."""
        if from_block < 0 or to_block > self.height or from_block > to_block:
            raise ValueError(f"invalid block range ({from_block}, {to_block}]")
        if address not in self._accounts:
            raise UnknownAccount(to_hex(address))
        oldest = self._oldest_retained()
        if from_block + 1 < oldest:
            raise BlockPruned(f"blocks below {oldest} are pruned")
        result = []
        for number in range(from_block + 1, to_block + 1):
            result.extend(b for b in self._batches[number] if b.target == address)
        return result

    def get_trie_node(self, digest: bytes) -> bytes:
        """Content-addressed node fetch, used when merging single proofs."""
        encoding = self.store.encoding(digest)
        if encoding is None:
            raise CorruptNode(to_hex(digest))
        return encoding

    def check_header_chain(self) -> None:
        """Audit: every header's parent hash matches its predecessor."""
        for previous, current in zip(self._headers, self._headers[1:]):
            assert current.parent_hash == previous.header_hash()
        assert self._headers[0].parent_hash == ZERO_HASH
