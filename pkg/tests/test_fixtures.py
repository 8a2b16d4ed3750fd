"""Fixture generation and serialization formats."""

import time

import pytest

from smartsync import Trie
from smartsync.errors import MalformedWire
from smartsync.fixtures import (
    chain_from_fixture,
    dump_json,
    generate_chain_fixture,
    load_json,
    trie_entries_from_fixture,
    trie_entries_to_fixture,
)

from conftest import random_entries
import random


def test_same_seed_gives_identical_fixture_files(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    dump_json(generate_chain_fixture(40, 8, seed=5), a)
    dump_json(generate_chain_fixture(40, 8, seed=5), b)
    assert a.read_bytes() == b.read_bytes()
    dump_json(generate_chain_fixture(40, 8, seed=6), b)
    assert a.read_bytes() != b.read_bytes()


def test_fixture_builds_deterministic_chain():
    fixture = generate_chain_fixture(25, 6, seed=9)
    chain_a, contract_a = chain_from_fixture(fixture)
    chain_b, contract_b = chain_from_fixture(fixture)
    assert contract_a == contract_b
    assert chain_a.head.header_hash() == chain_b.head.header_hash()
    assert chain_a.height == 6


def test_empty_contract_fixture():
    fixture = generate_chain_fixture(0, 0, seed=1)
    chain, contract = chain_from_fixture(fixture)
    assert chain.storage_entries(0, contract) == []


def test_large_fixture_smoke_under_a_minute():
    started = time.perf_counter()
    fixture = generate_chain_fixture(10_000, 5, seed=2)
    chain, contract = chain_from_fixture(fixture)
    elapsed = time.perf_counter() - started
    assert len(chain.storage_entries(0, contract)) == 10_000
    assert elapsed < 60, f"took {elapsed:.1f}s"


def test_fixture_respects_retention():
    from smartsync.errors import BlockPruned

    fixture = generate_chain_fixture(10, 12, seed=3)
    chain, contract = chain_from_fixture(fixture, retention=4)
    with pytest.raises(BlockPruned):
        chain.get_header(0)


def test_malformed_fixture_rejected():
    with pytest.raises(MalformedWire):
        chain_from_fixture({"genesis": {}})
    with pytest.raises(MalformedWire):
        chain_from_fixture({"genesis": {"accounts": {"0x01": {}}}})  # bad address length


def test_trie_fixture_round_trip(tmp_path):
    rng = random.Random(4)
    entries = sorted(random_entries(rng, 30).items())
    path = tmp_path / "trie.json"
    dump_json(trie_entries_to_fixture(entries), path)
    loaded = trie_entries_from_fixture(load_json(path))
    assert loaded == entries
    assert Trie.from_entries(loaded).root_hash() == Trie.from_entries(entries).root_hash()


def test_trie_fixture_shape():
    fixture = trie_entries_to_fixture([(b"\x00" * 32, b"\x07")])
    assert set(fixture) == {"entries"}
    assert fixture["entries"][0] == {"key": "0x" + "00" * 32, "value": "0x07"}
    with pytest.raises(MalformedWire):
        trie_entries_from_fixture({"rows": []})
