"""Deterministic fixture generation and JSON (de)serialization.

Chain fixtures: {"contract": hex, "genesis": {"accounts": {...}}, "blocks":
[[batch, ...], ...]}. Trie fixtures: {"entries": [{"key": hex, "value":
hex}]}. All hex is 0x-prefixed lowercase; serialization sorts keys, so a
given seed always produces byte-identical files.
"""

from __future__ import annotations

import json
import random
from pathlib import Path
from typing import Optional, Union

from .chainsim import Chain, GenesisAccount, WriteBatch
from .encoding import from_hex, to_hex
from .errors import MalformedWire


def generate_chain_fixture(entries: int, blocks: int, seed: int) -> dict:
    """Seeded fixture: one contract account with `entries` storage slots and
    `blocks` blocks of mixed create/update/delete batches."""
    rng = random.Random(seed)
    address = rng.randbytes(20)
    storage: dict[bytes, bytes] = {}
    while len(storage) < entries:
        storage[rng.randbytes(32)] = _random_value(rng)
    alive = sorted(storage)
    block_list = []
    for _ in range(blocks):
        ops = []
        for _ in range(rng.randint(1, 4)):
            roll = rng.random()
            if alive and roll < 0.45:
                key = alive[rng.randrange(len(alive))]
                ops.append([to_hex(key), to_hex(_random_value(rng))])
            elif alive and roll < 0.65:
                index = rng.randrange(len(alive))
                key = alive.pop(index)
                ops.append([to_hex(key), None])
            else:
                key = rng.randbytes(32)
                alive.append(key)
                alive.sort()
                ops.append([to_hex(key), to_hex(_random_value(rng))])
        block_list.append([{"target": to_hex(address), "ops": ops}])
    return {
        "contract": to_hex(address),
        "genesis": {
            "accounts": {
                to_hex(address): {
                    "balance": 10 ** 18,
                    "nonce": 0,
                    "storage": {to_hex(k): to_hex(v) for k, v in storage.items()},
                }
            }
        },
        "blocks": block_list,
    }


def _random_value(rng: random.Random) -> bytes:
    length = rng.randint(1, 32)
    return bytes([rng.randint(1, 255)]) + rng.randbytes(length - 1)


def chain_from_fixture(fixture: dict, *, retention: Optional[int] = None) -> tuple[Chain, bytes]:
    """Build a chain from a fixture and apply all its blocks; returns the
    chain and the fixture's contract address."""
    try:
        accounts = {}
        for address_hex, account in fixture["genesis"]["accounts"].items():
            accounts[from_hex(address_hex)] = GenesisAccount(
                balance=account.get("balance", 0),
                nonce=account.get("nonce", 0),
                storage={from_hex(k): from_hex(v) for k, v in account.get("storage", {}).items()},
            )
        chain = Chain(accounts, retention=retention)
        for block in fixture.get("blocks", []):
            batches = [
                WriteBatch(
                    target=from_hex(batch["target"]),
                    ops=tuple(
                        (from_hex(key), None if value is None else from_hex(value))
                        for key, value in batch["ops"]
                    ),
                )
                for batch in block
            ]
            chain.apply_block(batches)
        contract_hex = fixture.get("contract")
        if contract_hex is not None:
            contract = from_hex(contract_hex)
        else:
            contract = chain.accounts()[0]
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedWire(f"chain fixture: {exc}") from None
    return chain, contract


def trie_entries_to_fixture(entries) -> dict:
    return {"entries": [{"key": to_hex(k), "value": to_hex(v)} for k, v in entries]}


def trie_entries_from_fixture(fixture: dict) -> list[tuple[bytes, bytes]]:
    try:
        return [(from_hex(e["key"]), from_hex(e["value"])) for e in fixture["entries"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedWire(f"trie fixture: {exc}") from None


def dump_json(obj: dict, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def load_json(path: Union[str, Path]) -> dict:
    return json.loads(Path(path).read_text())
