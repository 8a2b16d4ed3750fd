"""Target-side trusted store of source-chain block headers.

Submissions are monotone in block number and lineage-checked against the
stored predecessor when one exists, so sparse submissions (gaps) are
accepted. Stored entries are immutable. Header provenance validation is
a pluggable hook left unimplemented: roots are trusted by construction.
"""

from __future__ import annotations

from typing import Callable, Optional

from .chainsim import BlockHeader
from .errors import BrokenLineage, HeaderUnavailable, StaleHeader


class RelayStore:
    def __init__(self, validator: Optional[Callable[[BlockHeader], None]] = None):
        self._entries: dict[int, tuple[bytes, bytes]] = {}
        self.highest_finalized = -1
        self._validator = validator

    def submit_header(self, header: BlockHeader) -> None:
        if header.number <= self.highest_finalized:
            raise StaleHeader(
                f"block {header.number} not above finalized {self.highest_finalized}"
            )
        predecessor = self._entries.get(header.number - 1)
        if predecessor is not None and header.parent_hash != predecessor[1]:
            raise BrokenLineage(f"parent hash mismatch at block {header.number}")
        if self._validator is not None:
            self._validator(header)
        self._entries[header.number] = (header.global_state_root, header.header_hash())
        self.highest_finalized = header.number

    def get_state_root(self, number: int) -> bytes:
        try:
            return self._entries[number][0]
        except KeyError:
            raise HeaderUnavailable(f"no relayed header for block {number}") from None

    def get_header_hash(self, number: int) -> bytes:
        try:
            return self._entries[number][1]
        except KeyError:
            raise HeaderUnavailable(f"no relayed header for block {number}") from None

    def __contains__(self, number: int) -> bool:
        return number in self._entries

    def entries(self) -> dict[int, tuple[bytes, bytes]]:
        return dict(self._entries)

    def to_state(self) -> dict:
        return {
            str(number): {"state_root": "0x" + root.hex(), "header_hash": "0x" + hh.hex()}
            for number, (root, hh) in sorted(self._entries.items())
        }

    @classmethod
    def from_state(cls, state: dict) -> "RelayStore":
        relay = cls()
        for number_text, entry in state.items():
            number = int(number_text)
            root = bytes.fromhex(entry["state_root"][2:])
            header_hash = bytes.fromhex(entry["header_hash"][2:])
            relay._entries[number] = (root, header_hash)
            relay.highest_finalized = max(relay.highest_finalized, number)
        return relay
