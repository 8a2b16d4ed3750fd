"""Benchmark suites reproducing the synchronization cost trends.

The single-value suite sweeps storage sizes and leaf depths with
one-value syncs: cost rises with proof depth and with storage size. The
multi-value suite sweeps update batch sizes at fixed storage size:
per-value cost falls as shared subtree nodes amortize, so total cost
grows sub-linearly.

Records are deterministic for a given seed except for wall-clock times.
Scenario ids sort lexicographically, which is also the merge order for
shards produced by parallel runs.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass
from typing import Iterable, Sequence

from .chainsim import Chain, GenesisAccount, WriteBatch
from .proofs import path_node_count, path_node_counts
from .proxy import ProxyContract
from .relay import RelayStore
from .syncclient import SyncClient

SINGLE_SUITE_SIZES = (10, 100, 1000, 10000)
MULTI_SUITE_SIZES = (1000, 10000)
MULTI_SUITE_BATCHES = (1, 10, 100, 1000)
DEFAULT_SAMPLES = 24

CSV_COLUMNS = (
    "scenario",
    "storageSize",
    "treeDepth",
    "valueIndex",
    "batchSize",
    "payloadBytes",
    "hashInvocations",
    "perValueCost",
    "wallClockMs",
)


@dataclass(frozen=True)
class BenchRecord:
    scenario: str
    storage_size: int
    tree_depth: int
    value_index: int
    batch_size: int
    payload_bytes: int
    hash_invocations: int
    per_value_cost: float
    wall_clock_ms: float

    def row(self) -> tuple:
        return (
            self.scenario,
            self.storage_size,
            self.tree_depth,
            self.value_index,
            self.batch_size,
            self.payload_bytes,
            self.hash_invocations,
            round(self.per_value_cost, 3),
            round(self.wall_clock_ms, 3),
        )


def _seeded_contract(size: int, seed: int) -> tuple[Chain, bytes, random.Random]:
    rng = random.Random(seed)
    address = rng.randbytes(20)
    storage: dict[bytes, bytes] = {}
    while len(storage) < size:
        storage[rng.randbytes(32)] = bytes([rng.randint(1, 255)]) + rng.randbytes(31)
    chain = Chain({address: GenesisAccount(storage=storage)})
    return chain, address, rng


def _fork(chain: Chain, address: bytes) -> tuple[SyncClient, ProxyContract]:
    relay = RelayStore()
    client = SyncClient(chain, relay)
    proxy = ProxyContract(address, relay)
    client.fork_contract(address, chain.height, proxy)
    return client, proxy


def _fresh_value(rng: random.Random) -> bytes:
    return bytes([rng.randint(1, 255)]) + rng.randbytes(31)


def run_single_suite(
    sizes: Sequence[int] = SINGLE_SUITE_SIZES,
    *,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 1,
) -> list[BenchRecord]:
    """One-value syncs at representative keys across every observed proof
    depth, per storage size."""
    records = []
    for size in sizes:
        chain, address, rng = _seeded_contract(size, seed)
        client, proxy = _fork(chain, address)
        keys = [k for k, _ in chain.storage_entries(0, address)]
        depth_of = {
            key: len(chain.get_storage_proof(0, address, key).nodes) for key in keys
        }
        selected = _spread_by_depth(keys, depth_of, samples)
        for index, key in enumerate(selected):
            batch = WriteBatch(address, ((key, _fresh_value(rng)),))
            chain.apply_block([batch])
            started = time.perf_counter()
            outcome = client.run_sync(proxy, chain.height)
            elapsed_ms = (time.perf_counter() - started) * 1000
            report = outcome.result.report
            depth = path_node_count(outcome.plan.payload.multi_proof, key)
            records.append(
                BenchRecord(
                    scenario=f"single-s{size:05d}-k{index:03d}",
                    storage_size=size,
                    tree_depth=depth,
                    value_index=index,
                    batch_size=1,
                    payload_bytes=report.payload_bytes,
                    hash_invocations=report.hash_invocations,
                    per_value_cost=report.per_value_cost,
                    wall_clock_ms=elapsed_ms,
                )
            )
    return sorted(records, key=lambda r: r.scenario)


def _spread_by_depth(keys, depth_of, samples: int) -> list[bytes]:
    """Representative keys covering every depth, ordered by (depth, key)."""
    buckets: dict[int, list[bytes]] = {}
    for key in sorted(keys):
        buckets.setdefault(depth_of[key], []).append(key)
    depths = sorted(buckets)
    per_bucket = max(1, samples // len(depths))
    selected = []
    for depth in depths:
        bucket = buckets[depth]
        if len(bucket) <= per_bucket:
            picks = bucket
        else:
            step = len(bucket) / per_bucket
            picks = [bucket[int(i * step)] for i in range(per_bucket)]
        selected.extend(picks)
    return selected


def run_multi_suite(
    sizes: Sequence[int] = MULTI_SUITE_SIZES,
    batches: Sequence[int] = MULTI_SUITE_BATCHES,
    *,
    seed: int = 1,
) -> list[BenchRecord]:
    """One sync per batch size, each updating `batch` keys in a single block."""
    records = []
    for size in sizes:
        chain, address, rng = _seeded_contract(size, seed)
        client, proxy = _fork(chain, address)
        keys = [k for k, _ in chain.storage_entries(0, address)]
        for batch_size in batches:
            if batch_size > size:
                continue
            picked = rng.sample(keys, batch_size)
            batch = WriteBatch(address, tuple((k, _fresh_value(rng)) for k in picked))
            chain.apply_block([batch])
            started = time.perf_counter()
            outcome = client.run_sync(proxy, chain.height)
            elapsed_ms = (time.perf_counter() - started) * 1000
            report = outcome.result.report
            depth = max(path_node_counts(outcome.plan.payload.multi_proof).values())
            records.append(
                BenchRecord(
                    scenario=f"multi-s{size:05d}-b{batch_size:04d}",
                    storage_size=size,
                    tree_depth=depth,
                    value_index=0,
                    batch_size=batch_size,
                    payload_bytes=report.payload_bytes,
                    hash_invocations=report.hash_invocations,
                    per_value_cost=report.per_value_cost,
                    wall_clock_ms=elapsed_ms,
                )
            )
    return sorted(records, key=lambda r: r.scenario)


def records_to_csv(records: Iterable[BenchRecord]) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for record in records:
        lines.append(",".join(str(cell) for cell in record.row()))
    return "\n".join(lines) + "\n"


def merge_csv_shards(shards: Sequence[str]) -> str:
    """Merge CSV shards (each with a header) deterministically by scenario id."""
    rows = []
    for shard in shards:
        lines = [line for line in shard.strip().splitlines() if line]
        if not lines:
            continue
        if lines[0] != ",".join(CSV_COLUMNS):
            raise ValueError("shard header does not match the fixed column set")
        rows.extend(lines[1:])
    rows.sort(key=lambda line: line.split(",", 1)[0])
    return "\n".join([",".join(CSV_COLUMNS)] + rows) + "\n"
