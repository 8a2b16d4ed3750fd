"""Storage proofs, multi proofs and transition confirmations.

A storage proof chains node encodings from the root toward one key; it
proves either the key's value or its absence. A multi proof covers many
keys with a single pruned subtree: every node on a touched path is
present in full, every pruned branch is replaced by a 33-byte
placeholder (0xFE || hash), and the sibling nodes that on-target
restructuring may need — the merge partner of any branch that could
collapse to one child — ride along in full.

A transition confirmation re-evaluates the pruned subtree under the
previous values of all touched keys: modified keys are reverted, keys
created by the transition are removed (with full branch collapse), keys
deleted by it are re-inserted (with splits). The recomputed root must
reproduce the previous storage root; any withheld update stays frozen
inside a placeholder hash and makes the roots differ.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping, Optional, Sequence

from .encoding import (
    EMPTY_LIST_ENCODING,
    EMPTY_ROOT,
    HASH_LEN,
    LIST_TAG,
    PLACEHOLDER_TAG,
    hash_bytes,
    key_to_nibbles,
    to_hex,
)
from .errors import (
    BrokenHashChain,
    InsufficientProofNodes,
    MalformedNode,
    MalformedSubtree,
    PathMismatch,
    PlaceholderOnKeyPath,
    RootMismatch,
    ValueMismatch,
)
from .trie import Branch, Extension, Leaf, Node, NodeStore, Trie, decode_node, encode_node

STATE_KEY_LEN = 32
_MAX_SUBTREE_DEPTH = 150


# --- single proofs ------------------------------------------------------------

@dataclass(frozen=True)
class StorageProof:
    """Inclusion or non-inclusion witness for one key under a storage root."""

    key: bytes
    value: Optional[bytes]
    nodes: tuple[bytes, ...]


def prove(trie: Trie, key: bytes) -> StorageProof:
    """Extract the root-to-terminal node chain for a key.

    Inline children are embedded in their parent's encoding and produce no
    separate proof nodes. For absent keys the chain ends at the node where
    the path diverges, proving non-inclusion.
    """
    trie.root_hash()  # commit, so hash references resolve from the store
    node = trie.root_node
    if node is None:
        return StorageProof(key, None, (EMPTY_LIST_ENCODING,))
    nodes = [encode_node(node)]
    path = key_to_nibbles(key)
    value: Optional[bytes] = None
    while True:
        if isinstance(node, Leaf):
            value = node.value if path == node.path else None
            break
        if isinstance(node, Extension):
            length = len(node.path)
            if path[:length] != node.path:
                break
            path = path[length:]
            ref = node.child
        else:
            if not path:
                value = node.value
                break
            ref = node.children[path[0]]
            if ref is None:
                break
            path = path[1:]
        if isinstance(ref, bytes):
            node = trie.resolve(ref)
            nodes.append(encode_node(node))
        else:
            node = ref
    return StorageProof(key, value, tuple(nodes))


def verify_proof(root: bytes, proof: StorageProof) -> Optional[bytes]:
    """Accept iff the nodes chain by hash from the root along the key's path
    and terminate at the claimed value (or proven absence).

    Returns the verified value. Rejections are distinguished: RootMismatch,
    BrokenHashChain (a child reference without a matching node),
    PathMismatch (nodes left over after the walk terminated), ValueMismatch,
    and MalformedNode for undecodable node bytes.
    """
    nodes = proof.nodes
    if not nodes:
        raise MalformedNode("proof carries no nodes")
    if hash_bytes(nodes[0]) != root:
        raise RootMismatch(f"first node does not hash to {to_hex(root)}")
    node = decode_node(nodes[0])
    path = key_to_nibbles(proof.key)
    index = 0
    found: Optional[bytes] = None
    if node is None:
        if len(nodes) != 1:
            raise PathMismatch("nodes following an empty-trie encoding")
    else:
        while True:
            if isinstance(node, Leaf):
                found = node.value if path == node.path else None
                break
            if isinstance(node, Extension):
                length = len(node.path)
                if path[:length] != node.path:
                    break
                path = path[length:]
                ref = node.child
            else:
                if not path:
                    found = node.value
                    break
                ref = node.children[path[0]]
                if ref is None:
                    break
                path = path[1:]
            if isinstance(ref, bytes):
                index += 1
                if index >= len(nodes):
                    raise BrokenHashChain("child reference without a following node")
                if hash_bytes(nodes[index]) != ref:
                    raise BrokenHashChain("node does not hash to its parent's reference")
                node = decode_node(nodes[index])
                if node is None:
                    raise MalformedNode("empty encoding inside a proof chain")
            else:
                node = ref
        if index != len(nodes) - 1:
            raise PathMismatch("unused proof nodes off the key's path")
    if found != proof.value:
        claimed = "absent" if proof.value is None else to_hex(proof.value)
        walked = "absent" if found is None else to_hex(found)
        raise ValueMismatch(f"claimed {claimed}, walk found {walked}")
    return found


# --- multi proofs ----------------------------------------------------------------

@dataclass(frozen=True)
class MultiProof:
    """Pruned-subtree witness for a set of keys.

    `entries` is the deterministic pre-order stream: full node encodings
    (starting 0xC0) interleaved with placeholders (0xFE || hash) standing
    for pruned hash references, in child-slot order.
    """

    keys: tuple[bytes, ...]
    entries: tuple[bytes, ...]

    @property
    def placeholder_count(self) -> int:
        return sum(1 for e in self.entries if e[0] == PLACEHOLDER_TAG)

    @property
    def node_count(self) -> int:
        return len(self.entries) - self.placeholder_count


@dataclass(frozen=True)
class TransitionConfirmation:
    """Result of re-evaluating a multi proof under pre-transition values."""

    computed_root: bytes
    subtree: Trie


def _placeholder(digest: bytes) -> bytes:
    return bytes([PLACEHOLDER_TAG]) + digest


def _is_placeholder(entry: bytes) -> bool:
    return len(entry) == HASH_LEN + 1 and entry[0] == PLACEHOLDER_TAG


def build_multi_proof(trie: Trie, keys: Sequence[bytes]) -> MultiProof:
    """Prune the trie down to the touched keys' paths.

    Every node on a path to a touched key (including non-inclusion
    divergence points) is emitted in full; other hash references become
    placeholders — except that when all but one occupied slot of a branch
    is touched, the remaining sibling is emitted one level deep, because a
    confirmation that deletes the touched slots must know the merge
    partner's content to collapse the branch.
    """
    key_list = sorted(set(keys))
    if not key_list:
        raise ValueError("multi proof requires at least one key")
    for key in key_list:
        if len(key) != STATE_KEY_LEN:
            raise ValueError(f"state keys are {STATE_KEY_LEN} bytes, got {len(key)}")
    trie.root_hash()
    root = trie.root_node
    if root is None:
        return MultiProof(tuple(key_list), (EMPTY_LIST_ENCODING,))
    entries: list[bytes] = []
    paths = [key_to_nibbles(k) for k in key_list]
    _emit(trie, root, paths, entries)
    return MultiProof(tuple(key_list), tuple(entries))


def _emit(trie: Trie, node: Node, paths: list, out: list) -> None:
    out.append(encode_node(node))
    if isinstance(node, Leaf):
        return
    if isinstance(node, Extension):
        length = len(node.path)
        continuing = [p[length:] for p in paths if p[:length] == node.path]
        if isinstance(node.child, bytes):
            if continuing:
                _emit(trie, trie.resolve(node.child), continuing, out)
            else:
                out.append(_placeholder(node.child))
        return
    groups: dict[int, list] = {}
    for p in paths:
        if p:
            groups.setdefault(p[0], []).append(p[1:])
    occupied = [i for i, ref in enumerate(node.children) if ref is not None]
    touched_occupied = [i for i in groups if node.children[i] is not None]
    untouched = [i for i in occupied if i not in groups]
    expand = set()
    if len(untouched) == 1 and touched_occupied:
        expand.add(untouched[0])
    for i in range(16):
        ref = node.children[i]
        if ref is None:
            continue
        sub_paths = groups.get(i)
        if sub_paths is not None:
            if isinstance(ref, bytes):
                _emit(trie, trie.resolve(ref), sub_paths, out)
        elif isinstance(ref, bytes):
            if i in expand:
                _emit_shallow(trie, trie.resolve(ref), out)
            else:
                out.append(_placeholder(ref))
        # inline children ride along inside the parent encoding


def _emit_shallow(trie: Trie, node: Node, out: list) -> None:
    """Emit one node with placeholders for all of its hash references."""
    out.append(encode_node(node))
    for ref in _hash_refs(node):
        out.append(_placeholder(ref))


def _hash_refs(node: Node) -> Iterator[bytes]:
    """Hash references of a node in canonical (slot) order."""
    if isinstance(node, Extension):
        if isinstance(node.child, bytes):
            yield node.child
    elif isinstance(node, Branch):
        for ref in node.children:
            if isinstance(ref, bytes):
                yield ref


def _parse_subtree(entries: Sequence[bytes]) -> tuple[bytes, Optional[Node], NodeStore]:
    """Reconstruct (root hash, root node, store) from the pre-order stream.

    Validates the grammar end to end: each hash reference of an expanded
    node must be followed by either its full child (hash-checked) or a
    placeholder carrying exactly that hash; the stream must be fully
    consumed.
    """
    if not entries:
        raise MalformedSubtree("empty node stream")
    store = NodeStore()
    first = entries[0]
    if _is_placeholder(first):
        raise MalformedSubtree("subtree root is a placeholder")
    if first == EMPTY_LIST_ENCODING:
        if len(entries) != 1:
            raise MalformedSubtree("entries following an empty-trie encoding")
        return EMPTY_ROOT, None, store
    position = 1

    def take() -> bytes:
        nonlocal position
        if position >= len(entries):
            raise MalformedSubtree("truncated node stream")
        entry = entries[position]
        position += 1
        return entry

    def parse_node(encoding: bytes, depth: int) -> bytes:
        if depth > _MAX_SUBTREE_DEPTH:
            raise MalformedSubtree("subtree deeper than any valid key path")
        try:
            node = decode_node(encoding)
        except MalformedNode as exc:
            raise MalformedSubtree(str(exc)) from None
        if node is None:
            raise MalformedSubtree("empty encoding inside the subtree")
        digest = hash_bytes(encoding)
        store.put(digest, encoding)
        for ref in _hash_refs(node):
            entry = take()
            if _is_placeholder(entry):
                if entry[1:] != ref:
                    raise MalformedSubtree("placeholder hash differs from the parent reference")
            elif entry[:1] == bytes([LIST_TAG]):
                if parse_node(entry, depth + 1) != ref:
                    raise MalformedSubtree("child does not hash to the parent reference")
            else:
                raise MalformedSubtree("stream entry is neither a node nor a placeholder")
        return digest

    root_hash = parse_node(first, 0)
    if position != len(entries):
        raise MalformedSubtree("unused entries in the node stream")
    return root_hash, store.node(root_hash), store


def _check_keys(keys: Sequence[bytes]) -> None:
    previous = None
    for key in keys:
        if not isinstance(key, bytes) or len(key) != STATE_KEY_LEN:
            raise MalformedSubtree("touched keys must be 32-byte strings")
        if previous is not None and key <= previous:
            raise MalformedSubtree("touched keys must be strictly ascending")
        previous = key


def verify_multi_proof(root: bytes, mp: MultiProof) -> dict[bytes, Optional[bytes]]:
    """Recompute the subtree root bottom-up, treating placeholders as opaque
    hashes; accept iff it equals `root`.

    On acceptance returns the proven value (or absence) for every touched
    key. Raises RootMismatch, MalformedSubtree, or PlaceholderOnKeyPath
    when a touched key's path cannot be walked without dereferencing a
    placeholder.
    """
    _check_keys(mp.keys)
    subtree_root, root_node, store = _parse_subtree(mp.entries)
    if subtree_root != root:
        raise RootMismatch(
            f"subtree root {to_hex(subtree_root)} does not match {to_hex(root)}"
        )
    partial = Trie(store=store, root=root_node, canonical=False, on_missing=PlaceholderOnKeyPath)
    return {key: partial.get(key) for key in mp.keys}


def compute_transition_confirmation(
    mp: MultiProof, current_values: Mapping[bytes, Optional[bytes]]
) -> TransitionConfirmation:
    """Substitute every touched key's proven value with the target's current
    one and recompute the root.

    Modified keys are re-inserted with their current value, keys absent
    from `current_values` (created by the transition) are deleted with
    full branch collapse, keys present there but proven absent (deleted by
    the transition) are re-inserted with splits. Raises
    InsufficientProofNodes when restructuring would have to dereference a
    placeholder.
    """
    _check_keys(mp.keys)
    _, root_node, store = _parse_subtree(mp.entries)
    partial = Trie(store=store, root=root_node, canonical=True, on_missing=InsufficientProofNodes)
    proven = {key: partial.get(key) for key in mp.keys}
    for key in mp.keys:
        new_value = proven[key]
        current = current_values.get(key)
        if current == new_value:
            continue
        if current is None:
            partial.delete(key)
        else:
            partial.insert(key, current)
    return TransitionConfirmation(computed_root=partial.root_hash(), subtree=partial)


def path_node_counts(mp: MultiProof, keys: Optional[Sequence[bytes]] = None) -> dict[bytes, int]:
    """Proof depth per key: full nodes the key's walk crosses in the subtree.

    Counts one per hash-boundary node on the path, as a single proof for
    the same key would; placeholders and proactively included siblings do
    not count. The subtree is parsed once for all keys.
    """
    _, root_node, store = _parse_subtree(mp.entries)
    partial = Trie(store=store, root=root_node, canonical=False, on_missing=PlaceholderOnKeyPath)
    counts: dict[bytes, int] = {}
    for key in (mp.keys if keys is None else keys):
        count = 1
        node: Optional[Node] = root_node
        path = key_to_nibbles(key)
        while node is not None:
            if isinstance(node, Leaf):
                break
            if isinstance(node, Extension):
                length = len(node.path)
                if path[:length] != node.path:
                    break
                path = path[length:]
                ref = node.child
            else:
                if not path:
                    break
                ref = node.children[path[0]]
                if ref is None:
                    break
                path = path[1:]
            if isinstance(ref, bytes):
                node = partial.resolve(ref)
                count += 1
            else:
                node = ref
        counts[key] = count
    return counts


def path_node_count(mp: MultiProof, key: bytes) -> int:
    """Proof depth of one key; see path_node_counts."""
    return path_node_counts(mp, [key])[key]


# --- state diffs -----------------------------------------------------------------

@dataclass(frozen=True)
class DiffEntry:
    key: bytes
    old_value: Optional[bytes]
    new_value: Optional[bytes]

    @property
    def kind(self) -> str:
        if self.old_value is None:
            return "create"
        if self.new_value is None:
            return "delete"
        return "update"


@dataclass(frozen=True)
class StateDiff:
    """Net effect of a state transition: per-key (old, new) with old != new."""

    entries: tuple[DiffEntry, ...] = field(default=())

    def __post_init__(self):
        seen = set()
        for entry in self.entries:
            if entry.key in seen:
                raise ValueError(f"duplicate key {to_hex(entry.key)} in diff")
            seen.add(entry.key)
            if entry.old_value == entry.new_value:
                raise ValueError(f"no-op entry for key {to_hex(entry.key)}")

    @classmethod
    def from_changes(cls, changes: Mapping[bytes, tuple[Optional[bytes], Optional[bytes]]]) -> "StateDiff":
        entries = tuple(
            DiffEntry(key, old, new)
            for key, (old, new) in sorted(changes.items())
            if old != new
        )
        return cls(entries)

    def keys(self) -> tuple[bytes, ...]:
        return tuple(entry.key for entry in self.entries)

    def without(self, keys: Sequence[bytes]) -> "StateDiff":
        dropped = set(keys)
        return StateDiff(tuple(e for e in self.entries if e.key not in dropped))

    def is_empty(self) -> bool:
        return not self.entries

    def __len__(self) -> int:
        return len(self.entries)
