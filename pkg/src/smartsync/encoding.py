"""Canonical byte-level encodings shared by the trie, proofs and wire formats.

Primitives:

* varint            -- unsigned LEB128, minimal form only
* byte-string       -- varint length || bytes
* list              -- 0xC0 || varint item-count || items
* hex-prefix path   -- flag nibble (parity bit + leaf bit) packed with nibbles

Every hash in the system is the 32-byte SHA-256 digest of a canonical
encoding. Encodings are bit-exact: each value has exactly one accepted
byte form, and decoders reject everything else.
"""

from __future__ import annotations

import hashlib
from typing import Sequence

LIST_TAG = 0xC0
PLACEHOLDER_TAG = 0xFE
HASH_LEN = 32
MAX_VALUE_LEN = 32

# Safety caps applied when parsing untrusted input.
MAX_VARINT_BYTES = 9
MAX_ITEM_COUNT = 1 << 20
MAX_BYTES_LEN = 1 << 24
MAX_NESTING = 64

_hash_invocations = 0


def hash_bytes(data: bytes) -> bytes:
    """SHA-256 digest; the single hash function used for nodes and headers."""
    global _hash_invocations
    _hash_invocations += 1
    return hashlib.sha256(data).digest()


def hash_invocation_count() -> int:
    """Monotone counter of hash_bytes calls, sampled by the cost meter."""
    return _hash_invocations


def write_varint(value: int) -> bytes:
    if value < 0:
        raise ValueError("varint must be non-negative")
    out = bytearray()
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return bytes(out)


def read_varint(data: bytes, pos: int) -> tuple[int, int]:
    """Strict minimal LEB128: rejects truncation, oversize and padded forms."""
    result = 0
    shift = 0
    start = pos
    while True:
        if pos >= len(data):
            raise ValueError("truncated varint")
        if pos - start >= MAX_VARINT_BYTES:
            raise ValueError("varint too long")
        byte = data[pos]
        result |= (byte & 0x7F) << shift
        pos += 1
        if not byte & 0x80:
            if byte == 0 and pos - start > 1:
                raise ValueError("non-minimal varint")
            return result, pos
        shift += 7


def encode_bytes(payload: bytes) -> bytes:
    return write_varint(len(payload)) + payload


def encode_list(items: Sequence[bytes]) -> bytes:
    """Items must already be encoded; the list frames them with a count."""
    return bytes([LIST_TAG]) + write_varint(len(items)) + b"".join(items)


EMPTY_LIST_ENCODING = encode_list(())
EMPTY_ROOT = hashlib.sha256(EMPTY_LIST_ENCODING).digest()


def scan_item(data: bytes, pos: int, depth: int = 0) -> int:
    """Return the end offset of the single encoded item starting at pos.

    Items are self-delimiting: a list starts with 0xC0, anything else is a
    length-prefixed byte string.
    """
    if depth > MAX_NESTING:
        raise ValueError("nesting too deep")
    if pos >= len(data):
        raise ValueError("truncated item")
    if data[pos] == LIST_TAG:
        count, pos = read_varint(data, pos + 1)
        if count > MAX_ITEM_COUNT:
            raise ValueError("item count too large")
        for _ in range(count):
            pos = scan_item(data, pos, depth + 1)
        return pos
    length, pos = read_varint(data, pos)
    if length > MAX_BYTES_LEN:
        raise ValueError("byte string too large")
    end = pos + length
    if end > len(data):
        raise ValueError("truncated byte string")
    return end


# --- nibbles and hex-prefix paths -------------------------------------------

def key_to_nibbles(key: bytes) -> tuple[int, ...]:
    nibbles = []
    for byte in key:
        nibbles.append(byte >> 4)
        nibbles.append(byte & 0x0F)
    return tuple(nibbles)


def nibbles_to_bytes(nibbles: Sequence[int]) -> bytes:
    if len(nibbles) % 2:
        raise ValueError("nibble sequence must have even length")
    return bytes(
        (nibbles[i] << 4) | nibbles[i + 1] for i in range(0, len(nibbles), 2)
    )


def hex_prefix_encode(nibbles: Sequence[int], is_leaf: bool) -> bytes:
    """Pack a nibble path with a flag nibble carrying parity and the leaf bit.

    Flag values: 0 extension/even, 1 extension/odd, 2 leaf/even, 3 leaf/odd.
    """
    flag = (2 if is_leaf else 0) | (len(nibbles) & 1)
    if flag & 1:
        head = bytes([(flag << 4) | nibbles[0]])
        rest = nibbles[1:]
    else:
        head = bytes([flag << 4])
        rest = nibbles
    return head + nibbles_to_bytes(rest)


def hex_prefix_decode(data: bytes) -> tuple[tuple[int, ...], bool]:
    if not data:
        raise ValueError("empty hex-prefix path")
    flag = data[0] >> 4
    if flag > 3:
        raise ValueError("invalid hex-prefix flag")
    is_leaf = bool(flag & 2)
    nibbles = key_to_nibbles(data)
    if flag & 1:
        return nibbles[1:], is_leaf
    if data[0] & 0x0F:
        raise ValueError("non-zero padding in hex-prefix path")
    return nibbles[2:], is_leaf


# --- state values -------------------------------------------------------------

def is_canonical_value(value: bytes) -> bool:
    """Canonical stored values are 1..32 bytes and never start with 0x00."""
    return 0 < len(value) <= MAX_VALUE_LEN and value[0] != 0


def value_from_int(number: int) -> bytes:
    """Minimal big-endian form of a positive integer (zero means absence)."""
    if number <= 0:
        raise ValueError("stored values encode positive integers only")
    return number.to_bytes((number.bit_length() + 7) // 8, "big")


def int_from_value(value: bytes) -> int:
    return int.from_bytes(value, "big")


def min_be(number: int) -> bytes:
    """Minimal big-endian bytes of a non-negative integer; zero is empty."""
    if number < 0:
        raise ValueError("negative integer")
    if number == 0:
        return b""
    return number.to_bytes((number.bit_length() + 7) // 8, "big")


def pad_key(data: bytes, size: int = 32) -> bytes:
    """Left-pad short big-endian keys to the fixed key width."""
    if len(data) > size:
        raise ValueError(f"key longer than {size} bytes")
    return data.rjust(size, b"\x00")


def to_hex(data: bytes) -> str:
    return "0x" + data.hex()


def from_hex(text: str) -> bytes:
    body = text[2:] if text.startswith(("0x", "0X")) else text
    if len(body) % 2:
        body = "0" + body
    return bytes.fromhex(body)
