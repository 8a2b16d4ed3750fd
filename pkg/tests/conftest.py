"""Shared test fixtures and generators."""

from __future__ import annotations

import random

import pytest

from smartsync import (
    Chain,
    GenesisAccount,
    ProxyContract,
    RelayStore,
    SyncClient,
    Trie,
    WriteBatch,
)
from smartsync.encoding import pad_key


def random_value(rng: random.Random, max_len: int = 32) -> bytes:
    length = rng.randint(1, max_len)
    return bytes([rng.randint(1, 255)]) + rng.randbytes(length - 1)


def random_entries(rng: random.Random, count: int) -> dict[bytes, bytes]:
    entries: dict[bytes, bytes] = {}
    while len(entries) < count:
        entries[rng.randbytes(32)] = random_value(rng)
    return entries


def make_transition(
    rng: random.Random,
    base_entries: dict[bytes, bytes],
    creates: int,
    updates: int,
    deletes: int,
) -> tuple[dict[bytes, bytes], dict[bytes, tuple[bytes | None, bytes | None]]]:
    """Random successor state plus the per-key (old, new) change map."""
    new_entries = dict(base_entries)
    changes: dict[bytes, tuple[bytes | None, bytes | None]] = {}
    existing = sorted(base_entries)
    rng.shuffle(existing)
    for _ in range(min(deletes, len(existing))):
        key = existing.pop()
        changes[key] = (base_entries[key], None)
        del new_entries[key]
    for _ in range(min(updates, len(existing))):
        key = existing.pop()
        value = random_value(rng)
        while value == base_entries[key]:
            value = random_value(rng)
        changes[key] = (base_entries[key], value)
        new_entries[key] = value
    for _ in range(creates):
        key = rng.randbytes(32)
        while key in new_entries:
            key = rng.randbytes(32)
        value = random_value(rng)
        changes[key] = (None, value)
        new_entries[key] = value
    return new_entries, changes


# --- adjacent short keys (left-padded), 32-byte values ------------------------

K00 = pad_key(bytes([0x00]))
K02 = pad_key(bytes([0x02]))
K03 = pad_key(bytes([0x03]))
K24 = pad_key(bytes([0x24]))
K42 = pad_key(bytes([0x42]))


def wide_value(seed_byte: int) -> bytes:
    return bytes([seed_byte]) * 32


@pytest.fixture
def quad_trie() -> tuple[Trie, dict[bytes, bytes]]:
    """Four adjacent short keys (left-padded) under a long shared extension."""
    entries = {
        K00: wide_value(0x10),
        K03: wide_value(0x13),
        K24: wide_value(0x24),
        K42: wide_value(0x42),
    }
    return Trie.from_entries(entries), entries


def single_account_chain(
    entries: dict[bytes, bytes], *, retention: int | None = None
) -> tuple[Chain, bytes]:
    address = b"\xaa" * 20
    chain = Chain({address: GenesisAccount(balance=1, storage=entries)}, retention=retention)
    return chain, address


def forked_world(
    entries: dict[bytes, bytes], *, at_block: int = 0, retention: int | None = None
) -> tuple[Chain, bytes, SyncClient, ProxyContract, RelayStore]:
    chain, address = single_account_chain(entries, retention=retention)
    relay = RelayStore()
    client = SyncClient(chain, relay)
    proxy = ProxyContract(address, relay)
    client.fork_contract(address, at_block, proxy)
    return chain, address, client, proxy, relay


def apply_changes_block(
    chain: Chain, address: bytes, changes: dict[bytes, tuple[bytes | None, bytes | None]]
) -> None:
    ops = tuple((key, new) for key, (_, new) in sorted(changes.items()))
    chain.apply_block([WriteBatch(address, ops)])
