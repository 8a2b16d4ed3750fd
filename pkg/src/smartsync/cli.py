"""Command-line surface.

Fixture generation, contract forking, synchronization, queries, the
withholding-attack harness and the cost benchmarks. State lives in JSON
files between invocations: a chain fixture (deterministic for a seed)
and a proxy state file carrying the replica plus its relay entries.

Exit codes: 0 on success (applied/sealed/noop), 2 on usage errors, 3 on
protocol rejections, which are printed as {"code", "reason", "detail"}
JSON objects on stderr.
"""

from __future__ import annotations

import functools
import json
import os
import sys
from pathlib import Path

import click

from . import bench as bench_mod
from .encoding import from_hex, pad_key, to_hex
from .errors import BlockPruned, SmartSyncError
from .fixtures import (
    chain_from_fixture,
    dump_json,
    generate_chain_fixture,
    load_json,
)
from .proxy import ProxyContract
from .relay import RelayStore
from .syncclient import SyncClient
from .wire import decode_sync_payload, encode_sync_payload

PROTOCOL_ERROR_EXIT = 3


def protocol_errors(func):
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except SmartSyncError as exc:
            click.echo(json.dumps(exc.to_json()), err=True)
            sys.exit(PROTOCOL_ERROR_EXIT)

    return wrapper


def _resolve_seed(seed: int) -> int:
    env = os.environ.get("SMARTSYNC_SEED")
    return int(env) if env else seed


def _parse_key(text: str) -> bytes:
    try:
        return pad_key(from_hex(text))
    except ValueError as exc:
        raise click.UsageError(f"bad key {text!r}: {exc}") from None


def _load_world(fixture_path: str, retention):
    chain, contract = chain_from_fixture(load_json(fixture_path), retention=retention)
    return chain, contract


def _load_proxy(path: str) -> tuple[ProxyContract, RelayStore]:
    state = load_json(path)
    relay = RelayStore.from_state(state.get("relay", {}))
    proxy = ProxyContract.from_state(state["proxy"], relay)
    return proxy, relay


def _save_proxy(path: str, proxy: ProxyContract, relay: RelayStore) -> None:
    dump_json({"format": "smartsync-proxy", "proxy": proxy.to_state(), "relay": relay.to_state()}, path)


@click.group()
def main():
    """Verifiable contract-state replication between simulated chains."""


@main.command()
@click.option("--entries", type=int, default=100, show_default=True, help="Genesis storage entries.")
@click.option("--blocks", type=int, default=10, show_default=True, help="Blocks of mutations to generate.")
@click.option("--seed", type=int, default=0, show_default=True, help="Deterministic seed (SMARTSYNC_SEED overrides).")
@click.option("--out", type=click.Path(dir_okay=False), default="fixture.json", show_default=True)
@protocol_errors
def gen(entries, blocks, seed, out):
    """Generate a deterministic chain fixture."""
    if entries < 0 or blocks < 0:
        raise click.UsageError("--entries and --blocks must be non-negative")
    seed = _resolve_seed(seed)
    fixture = generate_chain_fixture(entries, blocks, seed)
    dump_json(fixture, out)
    click.echo(json.dumps({"status": "written", "path": out, "contract": fixture["contract"],
                           "entries": entries, "blocks": blocks, "seed": seed}))


@main.command()
@click.option("--fixture", "fixture_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--block", type=int, default=None, help="Fork height (default: chain head).")
@click.option("--proxy", "proxy_path", type=click.Path(dir_okay=False), default="proxy.json", show_default=True)
@click.option("--chunk-size", type=int, default=256, show_default=True)
@click.option("--retention", type=int, default=None, help="Retained-history window on the source chain.")
@protocol_errors
def fork(fixture_path, block, proxy_path, chunk_size, retention):
    """Replicate the contract state at a block and seal the proxy."""
    chain, contract = _load_world(fixture_path, retention)
    at_block = chain.height if block is None else block
    relay = RelayStore()
    client = SyncClient(chain, relay)
    proxy = ProxyContract(contract, relay)
    client.fork_contract(contract, at_block, proxy, chunk_size=chunk_size)
    _save_proxy(proxy_path, proxy, relay)
    click.echo(json.dumps({"status": "sealed", "contract": to_hex(contract),
                           "block": at_block, "storage_root": to_hex(proxy.current_storage_root),
                           "proxy": proxy_path}))


@main.command()
@click.option("--fixture", "fixture_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--proxy", "proxy_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--to-block", type=int, default=None, help="Target height (default: chain head).")
@click.option("--payload-out", type=click.Path(dir_okay=False), default=None,
              help="Also write the submitted payload (hex-armored JSON) for replay/audit.")
@click.option("--via-single-proofs", is_flag=True, help="Assemble the multi proof by merging per-key proofs.")
@click.option("--retention", type=int, default=None)
@protocol_errors
def sync(fixture_path, proxy_path, to_block, payload_out, via_single_proofs, retention):
    """Synchronize the proxy up to a source block."""
    chain, contract = _load_world(fixture_path, retention)
    proxy, relay = _load_proxy(proxy_path)
    client = SyncClient(chain, relay)
    target = chain.height if to_block is None else to_block
    outcome = client.run_sync(proxy, target, via_single_proofs=via_single_proofs)
    if outcome.status == "noop":
        click.echo(json.dumps({"status": "noop", "to_block": target}))
        return
    _save_proxy(proxy_path, proxy, relay)
    if payload_out:
        dump_json({"format": "smartsync-payload",
                   "hex": to_hex(encode_sync_payload(outcome.plan.payload))}, payload_out)
    report = outcome.result.report
    click.echo(json.dumps({
        "status": "applied",
        "to_block": target,
        "touched_keys": len(outcome.plan.touched_keys),
        "storage_root": to_hex(outcome.result.new_root),
        "cost": json.loads(report.to_json_line()),
    }))


@main.command()
@click.option("--proxy", "proxy_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--key", required=True, help="Hex key; short keys are left-padded to 32 bytes.")
@protocol_errors
def query(proxy_path, key):
    """Read one key from the replicated state."""
    proxy, _ = _load_proxy(proxy_path)
    parsed = _parse_key(key)
    value = proxy.query(parsed)
    click.echo(json.dumps({"key": to_hex(parsed),
                           "value": None if value is None else to_hex(value)}))


@main.command()
@click.option("--fixture", "fixture_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--proxy", "proxy_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--to-block", type=int, default=None)
@click.option("--withhold", multiple=True, required=True,
              help="Key(s) to withhold from the payload (hex, left-padded).")
@click.option("--retention", type=int, default=None)
@protocol_errors
def attack(fixture_path, proxy_path, to_block, withhold, retention):
    """Submit a payload that withholds part of the transition.

    A sound proxy rejects it; the rejection is reported on stderr with
    exit code 3. Exit code 1 flags the soundness failure where the
    incomplete payload was accepted.
    """
    chain, contract = _load_world(fixture_path, retention)
    proxy, relay = _load_proxy(proxy_path)
    client = SyncClient(chain, relay)
    target = chain.height if to_block is None else to_block
    withheld = [_parse_key(k) for k in withhold]
    try:
        diff = client.compute_diff(contract, proxy.last_synced_block, target)
    except BlockPruned:
        diff = client.compute_diff_from_state(dict(proxy.storage.items()), contract, target)
    if not set(withheld) & set(diff.keys()):
        raise click.UsageError("withheld keys are not part of the transition window")
    outcome = client.run_sync(proxy, target, withhold=withheld)
    click.echo(json.dumps({"status": "accepted-incomplete-payload", "to_block": target}), err=True)
    sys.exit(1)


@main.command()
@click.option("--suite", type=click.Choice(["single", "multi"]), required=True)
@click.option("--seed", type=int, default=1, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="CSV path (default: stdout).")
@click.option("--figures", type=click.Path(file_okay=False), default=None,
              help="Directory for rendered figures alongside the CSV.")
@click.option("--sizes", default=None, help="Comma-separated storage sizes overriding the sweep.")
@click.option("--batches", default=None, help="Comma-separated batch sizes (multi suite).")
@click.option("--samples", type=int, default=bench_mod.DEFAULT_SAMPLES, show_default=True,
              help="Sampled keys per storage size (single suite).")
@protocol_errors
def bench(suite, seed, out, figures, sizes, batches, samples):
    """Run a cost benchmark suite and emit fixed-schema CSV records."""
    seed = _resolve_seed(seed)
    size_list = tuple(int(s) for s in sizes.split(",")) if sizes else None
    if suite == "single":
        records = bench_mod.run_single_suite(
            size_list or bench_mod.SINGLE_SUITE_SIZES, samples=samples, seed=seed
        )
    else:
        batch_list = tuple(int(b) for b in batches.split(",")) if batches else bench_mod.MULTI_SUITE_BATCHES
        records = bench_mod.run_multi_suite(
            size_list or bench_mod.MULTI_SUITE_SIZES, batch_list, seed=seed
        )
    csv_text = bench_mod.records_to_csv(records)
    if out:
        Path(out).write_text(csv_text)
        click.echo(json.dumps({"status": "written", "path": out, "records": len(records)}))
    else:
        click.echo(csv_text, nl=False)
    if figures:
        from .plotting import render_bench_figures

        written = render_bench_figures(records, Path(figures))
        click.echo(json.dumps({"figures": [str(p) for p in written]}), err=True)


@main.command("relay")
@click.option("--proxy", "proxy_path", type=click.Path(exists=True, dir_okay=False), required=True)
@protocol_errors
def relay_show(proxy_path):
    """Inspect the relay entries stored alongside a proxy."""
    state = load_json(proxy_path)
    relay = RelayStore.from_state(state.get("relay", {}))
    click.echo(json.dumps({"highest_finalized": relay.highest_finalized,
                           "entries": relay.to_state()}, sort_keys=True))


@main.command()
@click.option("--fixture", "fixture_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--proxy", "proxy_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--payload", "payload_path", type=click.Path(exists=True, dir_okay=False), required=True)
@protocol_errors
def replay(fixture_path, proxy_path, payload_path):
    """Re-submit a previously written payload file (audit path)."""
    proxy, relay = _load_proxy(proxy_path)
    payload = decode_sync_payload(from_hex(load_json(payload_path)["hex"]))
    result = proxy.synchronize(payload)
    _save_proxy(proxy_path, proxy, relay)
    click.echo(json.dumps({"status": "applied", "to_block": result.source_block,
                           "storage_root": to_hex(result.new_root)}))


if __name__ == "__main__":
    main()
