"""Verification cost accounting.

Gas is replaced by a deterministic weighted metric over what a verifier
actually does: payload bytes carried, hash invocations performed, state
writes applied. The weights loosely echo calldata/hash/storage pricing
ratios; absolute values are unitless, trends are the point.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

WEIGHT_BYTE = 1
WEIGHT_HASH = 60
WEIGHT_WRITE = 5000


@dataclass(frozen=True)
class CostReport:
    payload_bytes: int
    hash_invocations: int
    nodes_verified: int
    storage_writes: int
    touched_keys: int

    @property
    def total_cost(self) -> int:
        return (
            WEIGHT_BYTE * self.payload_bytes
            + WEIGHT_HASH * self.hash_invocations
            + WEIGHT_WRITE * self.storage_writes
        )

    @property
    def per_value_cost(self) -> float:
        return self.total_cost / max(1, self.touched_keys)

    def to_json_line(self) -> str:
        record = asdict(self)
        record["total_cost"] = self.total_cost
        record["per_value_cost"] = self.per_value_cost
        return json.dumps(record, sort_keys=True)
