"""Chain simulator: blocks, historical proofs, transaction windows."""

import random

import pytest

from smartsync import Trie, WriteBatch, verify_account_proof
from smartsync.encoding import pad_key, value_from_int
from smartsync.errors import BlockPruned, UnknownAccount
from smartsync.proofs import verify_proof

from conftest import random_entries, single_account_chain

A_KEY = pad_key(b"\x0a")
B_KEY = pad_key(b"\x0b")
C_KEY = pad_key(b"\x0c")


def flip_back_chain():
    """Three blocks mutating a as 6 -> 7 -> 6 (with a quiet third block)."""
    chain, address = single_account_chain({A_KEY: value_from_int(6)})
    chain.apply_block([WriteBatch(address, ((A_KEY, value_from_int(7)),))])
    chain.apply_block([WriteBatch(address, ((A_KEY, value_from_int(6)),))])
    chain.apply_block([])
    return chain, address


def test_empty_block_keeps_global_root():
    chain, _ = single_account_chain({A_KEY: b"\x01"})
    before = chain.head.global_state_root
    header = chain.apply_block([])
    assert header.global_state_root == before
    assert header.number == 1
    chain.check_header_chain()


def test_block_write_shows_in_storage_proof():
    chain, address = single_account_chain({})
    chain.apply_block([WriteBatch(address, ((A_KEY, b"\x2a"),))])
    proof = chain.get_storage_proof(1, address, A_KEY)
    assert proof.value == b"\x2a"
    root = chain.get_storage_root(1, address)
    assert verify_proof(root, proof) == b"\x2a"


def test_unknown_target_rejected_before_any_write():
    chain, address = single_account_chain({A_KEY: b"\x01"})
    head = chain.head
    with pytest.raises(UnknownAccount):
        chain.apply_block([
            WriteBatch(address, ((A_KEY, b"\x06"),)),
            WriteBatch(b"\xbb" * 20, ((A_KEY, b"\x07"),)),
        ])
    assert chain.head == head
    assert chain.get_storage_value(0, address, A_KEY) == b"\x01"


def test_value_flip_and_back_restores_storage_root():
    chain, address = flip_back_chain()
    assert chain.get_storage_root(1, address) != chain.get_storage_root(0, address)
    assert chain.get_storage_root(3, address) == chain.get_storage_root(0, address)
    assert chain.get_storage_value(3, address, A_KEY) == value_from_int(6)


def test_unchanged_key_shares_leaf_bytes_across_heights():
    # a's neighborhood is structurally stable; only a distant sibling changes
    entries = {A_KEY: b"\xaa" * 32, B_KEY: b"\xbb" * 32, C_KEY: b"\xcc" * 32}
    chain, address = single_account_chain(entries)
    chain.apply_block([WriteBatch(address, ((C_KEY, b"\xcd" * 32),))])
    proof_before = chain.get_storage_proof(0, address, A_KEY)
    proof_after = chain.get_storage_proof(1, address, A_KEY)
    assert proof_before.nodes[-1] == proof_after.nodes[-1]
    assert proof_before.nodes[0] != proof_after.nodes[0]  # root did move


def test_account_proof_verifies_and_tracks_storage_root():
    chain, address = flip_back_chain()
    for number in range(4):
        proof = chain.get_account_proof(number, address)
        account = verify_account_proof(chain.get_header(number).global_state_root, proof)
        assert account is not None
        assert account.storage_root == chain.get_storage_root(number, address)


def test_unregistered_address_yields_non_inclusion_account_proof():
    chain, _ = single_account_chain({A_KEY: b"\x01"})
    ghost = b"\xcc" * 20
    proof = chain.get_account_proof(0, ghost)
    assert proof.account is None
    assert verify_account_proof(chain.get_header(0).global_state_root, proof) is None


def test_stale_account_proof_fails_at_later_root():
    from smartsync.errors import ProofRejected

    chain, address = single_account_chain({A_KEY: b"\x01"})
    chain.apply_block([WriteBatch(address, ((A_KEY, b"\x02"),))])
    stale = chain.get_account_proof(0, address)
    with pytest.raises(ProofRejected):
        verify_account_proof(chain.get_header(1).global_state_root, stale)


def test_get_transactions_window():
    chain, address = single_account_chain({A_KEY: value_from_int(6)})
    chain.apply_block([WriteBatch(address, ((A_KEY, value_from_int(7)),))])
    chain.apply_block([WriteBatch(address, ((A_KEY, value_from_int(6)), (B_KEY, value_from_int(11))))])
    chain.apply_block([WriteBatch(address, ((C_KEY, value_from_int(12)),))])
    assert chain.get_transactions(address, 2, 2) == []
    window = chain.get_transactions(address, 0, 3)
    assert len(window) == 3
    assert [b.block_number for b in window] == [1, 2, 3]


def test_replay_of_window_reproduces_state():
    rng = random.Random(51)
    entries = random_entries(rng, 40)
    chain, address = single_account_chain(entries)
    alive = dict(entries)
    for _ in range(12):
        ops = []
        for _ in range(rng.randint(1, 5)):
            if alive and rng.random() < 0.4:
                key = rng.choice(sorted(alive))
                ops.append((key, None))
                del alive[key]
            else:
                key, value = rng.randbytes(32), bytes([rng.randint(1, 255)])
                ops.append((key, value))
                alive[key] = value
        chain.apply_block([WriteBatch(address, tuple(ops))])
    state = {k: v for k, v in chain.storage_entries(4, address)}
    for batch in chain.get_transactions(address, 4, 12):
        for key, value in batch.ops:
            if value is None:
                state.pop(key, None)
            else:
                state[key] = value
    assert state == dict(chain.storage_entries(12, address))


def test_retention_window_prunes_old_blocks():
    chain, address = single_account_chain({A_KEY: b"\x01"}, retention=4)
    for i in range(2, 12):
        chain.apply_block([WriteBatch(address, ((A_KEY, bytes([i])),))])
    chain.get_header(chain.height)
    chain.get_header(chain.height - 3)
    with pytest.raises(BlockPruned):
        chain.get_header(chain.height - 4)
    with pytest.raises(BlockPruned):
        chain.get_account_proof(0, address)
    with pytest.raises(BlockPruned):
        chain.get_transactions(address, 0, chain.height)
    # ranges entirely inside the window still work
    assert chain.get_transactions(address, chain.height - 3, chain.height)


def test_storage_root_consistency_against_rebuild():
    rng = random.Random(52)
    entries = random_entries(rng, 60)
    chain, address = single_account_chain(entries)
    chain.apply_block([WriteBatch(address, ((A_KEY, b"\x05"), (sorted(entries)[0], None)))])
    for number in (0, 1):
        snapshot = dict(chain.storage_entries(number, address))
        assert Trie.from_entries(snapshot).root_hash() == chain.get_storage_root(number, address)


def test_header_encoding_is_deterministic():
    chain_a, _ = flip_back_chain()
    chain_b, _ = flip_back_chain()
    hashes_a = [chain_a.get_header(i).header_hash() for i in range(4)]
    hashes_b = [chain_b.get_header(i).header_hash() for i in range(4)]
    assert hashes_a == hashes_b
    assert len(set(hashes_a)) == 4
