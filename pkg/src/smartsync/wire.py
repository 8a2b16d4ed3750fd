"""Binary wire formats and their hex-armored JSON carriers.

Formats (all lengths are strict-minimal varints; decoding must consume
every byte):

* StorageProof   0x53 || key(32) || absent:0x00 | present:0x01 varint len value || varint count || nodes
* MultiProof     0x4D || varint keyCount || keys(32 each) || varint entryCount || entries
* AccountProof   0x41 || address(20) || varint blockNumber || absent:0x00 | present:0x01 account fields || varint count || nodes
* SyncPayload    0x50 || varint sourceBlockNumber || AccountProof || MultiProof

Stream entries are self-delimiting: node encodings start 0xC0,
placeholders are 0xFE followed by a 32-byte hash.
"""

from __future__ import annotations

from .chainsim import ADDRESS_LEN, AccountProof, AccountTuple
from .encoding import (
    HASH_LEN,
    LIST_TAG,
    PLACEHOLDER_TAG,
    min_be,
    read_varint,
    scan_item,
    write_varint,
)
from .errors import MalformedWire
from .proofs import STATE_KEY_LEN, MultiProof, StorageProof

STORAGE_PROOF_TAG = 0x53
MULTI_PROOF_TAG = 0x4D
ACCOUNT_PROOF_TAG = 0x41
SYNC_PAYLOAD_TAG = 0x50

MAX_PROOF_NODES = 1 << 16
MAX_PROOF_KEYS = 1 << 16


def _read_exact(data: bytes, pos: int, length: int, what: str) -> tuple[bytes, int]:
    end = pos + length
    if end > len(data):
        raise MalformedWire(f"truncated {what}")
    return data[pos:end], end


def _read_varint(data: bytes, pos: int, what: str) -> tuple[int, int]:
    try:
        return read_varint(data, pos)
    except ValueError as exc:
        raise MalformedWire(f"{what}: {exc}") from None


def _read_entry(data: bytes, pos: int) -> tuple[bytes, int]:
    """One stream entry: a self-delimiting node encoding or a placeholder."""
    if pos >= len(data):
        raise MalformedWire("truncated node stream")
    lead = data[pos]
    if lead == PLACEHOLDER_TAG:
        return _read_exact(data, pos, 1 + HASH_LEN, "placeholder")
    if lead == LIST_TAG:
        try:
            end = scan_item(data, pos)
        except ValueError as exc:
            raise MalformedWire(f"node entry: {exc}") from None
        return data[pos:end], end
    raise MalformedWire(f"unexpected stream entry lead byte 0x{lead:02x}")


def _encode_node_stream(entries) -> bytes:
    out = bytearray(write_varint(len(entries)))
    for entry in entries:
        out += entry
    return bytes(out)


def _decode_node_stream(data: bytes, pos: int) -> tuple[tuple[bytes, ...], int]:
    count, pos = _read_varint(data, pos, "node count")
    if count > MAX_PROOF_NODES:
        raise MalformedWire("node count too large")
    entries = []
    for _ in range(count):
        entry, pos = _read_entry(data, pos)
        entries.append(entry)
    return tuple(entries), pos


# --- storage proofs ------------------------------------------------------------

def encode_storage_proof(proof: StorageProof) -> bytes:
    out = bytearray([STORAGE_PROOF_TAG])
    out += proof.key
    if proof.value is None:
        out.append(0x00)
    else:
        out.append(0x01)
        out += write_varint(len(proof.value))
        out += proof.value
    out += _encode_node_stream(proof.nodes)
    return bytes(out)


def decode_storage_proof(data: bytes) -> StorageProof:
    proof, pos = _decode_storage_proof(data, 0)
    if pos != len(data):
        raise MalformedWire("trailing bytes after storage proof")
    return proof


def _decode_storage_proof(data: bytes, pos: int) -> tuple[StorageProof, int]:
    tag, pos = _read_exact(data, pos, 1, "storage proof tag")
    if tag[0] != STORAGE_PROOF_TAG:
        raise MalformedWire("bad storage proof tag")
    key, pos = _read_exact(data, pos, STATE_KEY_LEN, "storage proof key")
    flag, pos = _read_exact(data, pos, 1, "value flag")
    if flag[0] == 0x00:
        value = None
    elif flag[0] == 0x01:
        length, pos = _read_varint(data, pos, "value length")
        if length == 0 or length > 1 << 16:
            raise MalformedWire("implausible value length")
        value, pos = _read_exact(data, pos, length, "value")
    else:
        raise MalformedWire("bad value flag")
    nodes, pos = _decode_node_stream(data, pos)
    return StorageProof(key, value, nodes), pos


# --- multi proofs ----------------------------------------------------------------

def encode_multi_proof(mp: MultiProof) -> bytes:
    out = bytearray([MULTI_PROOF_TAG])
    out += write_varint(len(mp.keys))
    for key in mp.keys:
        out += key
    out += _encode_node_stream(mp.entries)
    return bytes(out)


def decode_multi_proof(data: bytes) -> MultiProof:
    mp, pos = _decode_multi_proof(data, 0)
    if pos != len(data):
        raise MalformedWire("trailing bytes after multi proof")
    return mp


def _decode_multi_proof(data: bytes, pos: int) -> tuple[MultiProof, int]:
    tag, pos = _read_exact(data, pos, 1, "multi proof tag")
    if tag[0] != MULTI_PROOF_TAG:
        raise MalformedWire("bad multi proof tag")
    key_count, pos = _read_varint(data, pos, "key count")
    if key_count > MAX_PROOF_KEYS:
        raise MalformedWire("key count too large")
    keys = []
    previous = None
    for _ in range(key_count):
        key, pos = _read_exact(data, pos, STATE_KEY_LEN, "touched key")
        if previous is not None and key <= previous:
            raise MalformedWire("touched keys must be strictly ascending")
        previous = key
        keys.append(key)
    entries, pos = _decode_node_stream(data, pos)
    return MultiProof(tuple(keys), entries), pos


# --- account proofs ---------------------------------------------------------------

def encode_account_proof(proof: AccountProof) -> bytes:
    out = bytearray([ACCOUNT_PROOF_TAG])
    out += proof.address
    out += write_varint(proof.block_number)
    if proof.account is None:
        out.append(0x00)
    else:
        out.append(0x01)
        account = proof.account
        nonce = min_be(account.nonce)
        balance = min_be(account.balance)
        out += write_varint(len(nonce))
        out += nonce
        out += write_varint(len(balance))
        out += balance
        out += account.storage_root
        out += account.code_hash
    out += _encode_node_stream(proof.nodes)
    return bytes(out)


def decode_account_proof(data: bytes) -> AccountProof:
    proof, pos = _decode_account_proof(data, 0)
    if pos != len(data):
        raise MalformedWire("trailing bytes after account proof")
    return proof


def _decode_account_proof(data: bytes, pos: int) -> tuple[AccountProof, int]:
    tag, pos = _read_exact(data, pos, 1, "account proof tag")
    if tag[0] != ACCOUNT_PROOF_TAG:
        raise MalformedWire("bad account proof tag")
    address, pos = _read_exact(data, pos, ADDRESS_LEN, "address")
    block_number, pos = _read_varint(data, pos, "block number")
    flag, pos = _read_exact(data, pos, 1, "account flag")
    if flag[0] == 0x00:
        account = None
    elif flag[0] == 0x01:
        nonce_len, pos = _read_varint(data, pos, "nonce length")
        if nonce_len > 32:
            raise MalformedWire("implausible nonce length")
        nonce_bytes, pos = _read_exact(data, pos, nonce_len, "nonce")
        balance_len, pos = _read_varint(data, pos, "balance length")
        if balance_len > 32:
            raise MalformedWire("implausible balance length")
        balance_bytes, pos = _read_exact(data, pos, balance_len, "balance")
        storage_root, pos = _read_exact(data, pos, HASH_LEN, "storage root")
        code_hash, pos = _read_exact(data, pos, HASH_LEN, "code hash")
        account = AccountTuple(
            address=address,
            nonce=int.from_bytes(nonce_bytes, "big"),
            balance=int.from_bytes(balance_bytes, "big"),
            storage_root=storage_root,
            code_hash=code_hash,
        )
    else:
        raise MalformedWire("bad account flag")
    nodes, pos = _decode_node_stream(data, pos)
    return AccountProof(block_number, address, account, nodes), pos


# --- sync payloads ------------------------------------------------------------------

from dataclasses import dataclass  # noqa: E402  (kept near its sole user)


@dataclass(frozen=True)
class SyncPayload:
    """Account proof plus multi proof submitted to the target proxy; the
    account's storage root is the root the multi proof must verify against."""

    source_block_number: int
    account_proof: AccountProof
    multi_proof: MultiProof


def encode_sync_payload(payload: SyncPayload) -> bytes:
    out = bytearray([SYNC_PAYLOAD_TAG])
    out += write_varint(payload.source_block_number)
    out += encode_account_proof(payload.account_proof)
    out += encode_multi_proof(payload.multi_proof)
    return bytes(out)


def decode_sync_payload(data: bytes) -> SyncPayload:
    tag, pos = _read_exact(data, 0, 1, "payload tag")
    if tag[0] != SYNC_PAYLOAD_TAG:
        raise MalformedWire("bad payload tag")
    source_block, pos = _read_varint(data, pos, "source block number")
    account_proof, pos = _decode_account_proof(data, pos)
    multi_proof, pos = _decode_multi_proof(data, pos)
    if pos != len(data):
        raise MalformedWire("trailing bytes after payload")
    return SyncPayload(source_block, account_proof, multi_proof)
