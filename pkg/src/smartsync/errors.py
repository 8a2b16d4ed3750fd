"""Exception taxonomy.

Every rejection this package can produce derives from SmartSyncError so
that callers (and the CLI) can distinguish protocol rejections from
programming errors. `code` is a stable machine-readable identifier,
`reason` a short category phrase; instance messages carry specifics.
"""

from __future__ import annotations


class SmartSyncError(Exception):
    reason = "unspecified error"

    @property
    def code(self) -> str:
        return type(self).__name__

    def to_json(self) -> dict:
        return {"code": self.code, "reason": self.reason, "detail": str(self)}


# --- trie ---------------------------------------------------------------

class CorruptNode(SmartSyncError):
    reason = "a referenced trie node is missing or undecodable in the node store"


class NonCanonicalValue(SmartSyncError):
    reason = "stored values must be 1..32 bytes with no leading zero byte"


class DuplicateKey(SmartSyncError):
    reason = "bulk construction requires unique keys"


class MalformedNode(SmartSyncError):
    reason = "byte string is not a canonical node encoding"


# --- proof verification --------------------------------------------------

class ProofRejected(SmartSyncError):
    reason = "proof verification failed"


class RootMismatch(ProofRejected):
    reason = "first node does not hash to the expected root"


class BrokenHashChain(ProofRejected):
    reason = "a node does not hash to its parent's child reference"


class PathMismatch(ProofRejected):
    reason = "proof nodes do not lie on the claimed key's path"


class ValueMismatch(ProofRejected):
    reason = "walked value differs from the claimed value"


class MalformedSubtree(ProofRejected):
    reason = "multi-proof subtree stream is structurally invalid"


class PlaceholderOnKeyPath(ProofRejected):
    reason = "a touched key's path runs into a pruned placeholder"


class InsufficientProofNodes(ProofRejected):
    reason = "restructuring reached a placeholder; the prover must include more siblings"


# --- wire formats ---------------------------------------------------------

class MalformedWire(SmartSyncError):
    reason = "byte string does not parse as the expected wire format"


# --- chain simulator -------------------------------------------------------

class UnknownAccount(SmartSyncError):
    reason = "account does not exist on the chain"


class BlockPruned(SmartSyncError):
    reason = "block is outside the retained history window"


# --- relay -----------------------------------------------------------------

class StaleHeader(SmartSyncError):
    reason = "header height does not exceed the highest finalized entry"


class BrokenLineage(SmartSyncError):
    reason = "parent hash does not match the stored predecessor"


class HeaderUnavailable(SmartSyncError):
    reason = "relay holds no entry for the requested block"


# --- proxy -------------------------------------------------------------------

class AlreadySealed(SmartSyncError):
    reason = "migration is sealed; initialization entry points are closed"


class NotSealed(SmartSyncError):
    reason = "operation requires a sealed (finalized) migration"


class StaleSync(SmartSyncError):
    reason = "payload does not succeed the last synchronized block"


class AccountProofInvalid(SmartSyncError):
    reason = "account proof failed verification against the relayed state root"


class RootDivergence(SmartSyncError):
    reason = "locally loaded state does not reproduce the proven storage root"


class CodeHashMismatch(SmartSyncError):
    reason = "account code hash differs from the expected one (strict mode)"


class MultiProofInvalid(SmartSyncError):
    reason = "multi proof failed verification against the proven storage root"


class IncompleteTransition(SmartSyncError):
    reason = "transition confirmation did not reproduce the previous storage root"


class PayloadTooLarge(SmartSyncError):
    reason = "payload exceeds the configured size limit"


# --- sync client ---------------------------------------------------------------

class EmptyDiff(SmartSyncError):
    reason = "payload construction requires a non-empty diff"
