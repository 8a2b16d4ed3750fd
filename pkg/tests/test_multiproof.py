"""Multi proofs: pruning, placeholder grammar, oracle byte-equality."""

import random

import pytest

from smartsync import (
    MultiProof,
    Trie,
    build_multi_proof,
    prove,
    verify_multi_proof,
    verify_proof,
)
from smartsync.encoding import PLACEHOLDER_TAG, hash_bytes
from smartsync.errors import (
    MalformedSubtree,
    PlaceholderOnKeyPath,
    ProofRejected,
    RootMismatch,
)
from smartsync.proofs import path_node_count
from smartsync.trie import Leaf, decode_node

import oracle
from conftest import K00, K03, K42, random_entries


def test_quad_trie_two_key_proof_has_two_leaves_two_placeholders(quad_trie):
    trie, entries = quad_trie
    mp = build_multi_proof(trie, [K00, K03])
    assert mp.placeholder_count == 2
    leaves = [e for e in mp.entries if e[0] != PLACEHOLDER_TAG and isinstance(decode_node(e), Leaf)]
    assert len(leaves) == 2
    values = verify_multi_proof(trie.root_hash(), mp)
    assert values == {K00: entries[K00], K03: entries[K03]}


def test_all_keys_proof_has_no_placeholders(quad_trie):
    trie, entries = quad_trie
    mp = build_multi_proof(trie, sorted(entries))
    assert mp.placeholder_count == 0
    assert verify_multi_proof(trie.root_hash(), mp) == entries


def test_empty_trie_multi_proof_proves_absence():
    trie = Trie()
    mp = build_multi_proof(trie, [K00, K42])
    assert verify_multi_proof(trie.root_hash(), mp) == {K00: None, K42: None}


def test_round_trip_random_subsets():
    rng = random.Random(31)
    for size in (3, 20, 120, 400):
        entries = random_entries(rng, size)
        trie = Trie.from_entries(entries)
        root = trie.root_hash()
        keys = sorted(entries)
        for _ in range(6):
            subset = rng.sample(keys, rng.randint(1, min(9, size)))
            subset += [rng.randbytes(32)]  # one absent key
            mp = build_multi_proof(trie, subset)
            values = verify_multi_proof(root, mp)
            assert values == {k: entries.get(k) for k in set(subset)}


def test_multi_proof_bytes_match_oracle():
    rng = random.Random(32)
    for size in (2, 5, 40, 150):
        entries = random_entries(rng, size)
        trie = Trie.from_entries(entries)
        keys = sorted(entries)
        for _ in range(4):
            subset = rng.sample(keys, rng.randint(1, min(7, size)))
            subset.append(rng.randbytes(32))
            mp = build_multi_proof(trie, subset)
            assert list(mp.entries) == oracle.multi_proof_entries(entries, subset)


def test_single_multi_agreement():
    rng = random.Random(33)
    entries = random_entries(rng, 90)
    trie = Trie.from_entries(entries)
    root = trie.root_hash()
    for key in list(entries)[:12] + [rng.randbytes(32) for _ in range(4)]:
        single = prove(trie, key)
        single_value = verify_proof(root, single)
        multi_value = verify_multi_proof(root, build_multi_proof(trie, [key]))[key]
        assert single_value == multi_value == entries.get(key)


def test_path_node_sharing_bound():
    # Full path nodes in a multi proof never exceed the summed single-proof
    # node counts, with equality only for a single key (paths always share
    # the root once two keys are involved).
    rng = random.Random(34)
    entries = random_entries(rng, 300)
    trie = Trie.from_entries(entries)
    keys = sorted(entries)
    for count in (1, 2, 5, 10):
        subset = rng.sample(keys, count)
        mp = build_multi_proof(trie, subset)
        shared = _distinct_path_nodes(trie.root_hash(), mp)
        total = sum(len(prove(trie, k).nodes) for k in set(subset))
        if count == 1:
            assert shared == total
        else:
            assert shared < total


def _distinct_path_nodes(root, mp: MultiProof) -> int:
    # distinct full nodes lying on at least one touched path
    from smartsync.proofs import _parse_subtree
    from smartsync.encoding import key_to_nibbles
    from smartsync.trie import Branch, Extension, Trie as _Trie

    _, root_node, store = _parse_subtree(mp.entries)
    partial = _Trie(store=store, root=root_node, canonical=False)
    seen: set[int] = set()

    def walk(key):
        node = root_node
        path = key_to_nibbles(key)
        while node is not None:
            seen.add(id(node))
            if isinstance(node, Extension):
                if path[: len(node.path)] != node.path:
                    return
                path = path[len(node.path):]
                node = partial.resolve(node.child)
            elif isinstance(node, Branch):
                if not path or node.children[path[0]] is None:
                    return
                ref = node.children[path[0]]
                node = partial.resolve(ref)
                path = path[1:]
            else:
                return

    for key in mp.keys:
        walk(key)
    return len(seen)


def test_placeholder_on_key_path_rejected(quad_trie):
    trie, _ = quad_trie
    root = trie.root_hash()
    mp = build_multi_proof(trie, [K00, K03])
    # replace the K03 leaf entry with a placeholder carrying its hash
    entries = list(mp.entries)
    index = next(
        i for i, e in enumerate(entries)
        if e[0] != PLACEHOLDER_TAG and isinstance(decode_node(e), Leaf)
        and decode_node(e).value == b"\x13" * 32
    )
    entries[index] = bytes([PLACEHOLDER_TAG]) + hash_bytes(entries[index])
    pruned = MultiProof(mp.keys, tuple(entries))
    with pytest.raises(PlaceholderOnKeyPath):
        verify_multi_proof(root, pruned)


def test_wrong_root_rejected(quad_trie):
    trie, _ = quad_trie
    mp = build_multi_proof(trie, [K00])
    with pytest.raises(RootMismatch):
        verify_multi_proof(b"\x11" * 32, mp)


def test_unsorted_or_bad_keys_rejected(quad_trie):
    trie, _ = quad_trie
    root = trie.root_hash()
    mp = build_multi_proof(trie, [K00, K03])
    with pytest.raises(MalformedSubtree):
        verify_multi_proof(root, MultiProof((K03, K00), mp.entries))
    with pytest.raises(MalformedSubtree):
        verify_multi_proof(root, MultiProof((K00, K00), mp.entries))
    with pytest.raises(MalformedSubtree):
        verify_multi_proof(root, MultiProof((b"\x01",), mp.entries))


def test_truncated_and_padded_streams_rejected(quad_trie):
    trie, _ = quad_trie
    root = trie.root_hash()
    mp = build_multi_proof(trie, [K00, K03])
    with pytest.raises(MalformedSubtree):
        verify_multi_proof(root, MultiProof(mp.keys, mp.entries[:-1]))
    with pytest.raises(MalformedSubtree):
        verify_multi_proof(root, MultiProof(mp.keys, mp.entries + (mp.entries[-1],)))
    with pytest.raises(MalformedSubtree):
        verify_multi_proof(root, MultiProof(mp.keys, ()))


def test_every_byte_flip_in_nodes_rejected(quad_trie):
    trie, _ = quad_trie
    root = trie.root_hash()
    mp = build_multi_proof(trie, [K00, K03])
    for index, entry in enumerate(mp.entries):
        for offset in range(len(entry)):
            mutated = bytearray(entry)
            mutated[offset] ^= 0xFF
            entries = list(mp.entries)
            entries[index] = bytes(mutated)
            with pytest.raises(ProofRejected):
                verify_multi_proof(root, MultiProof(mp.keys, tuple(entries)))


from hypothesis import given, settings, strategies as st


@settings(max_examples=50, deadline=None)
@given(
    entries=st.dictionaries(
        keys=st.binary(min_size=32, max_size=32),
        values=st.binary(min_size=1, max_size=32).filter(lambda v: v[0] != 0),
        min_size=1,
        max_size=25,
    ),
    data=st.data(),
)
def test_property_multiproof_round_trip(entries, data):
    trie = Trie.from_entries(entries)
    root = trie.root_hash()
    keys = sorted(entries)
    picked = data.draw(
        st.lists(st.sampled_from(keys), min_size=1, max_size=len(keys), unique=True)
    )
    picked += data.draw(st.lists(st.binary(min_size=32, max_size=32), max_size=2))
    mp = build_multi_proof(trie, picked)
    assert verify_multi_proof(root, mp) == {k: entries.get(k) for k in set(picked)}


def test_path_node_count_matches_single_proof_depth():
    rng = random.Random(35)
    entries = random_entries(rng, 200)
    trie = Trie.from_entries(entries)
    for key in list(entries)[:10]:
        mp = build_multi_proof(trie, [key])
        assert path_node_count(mp, key) == len(prove(trie, key).nodes)
