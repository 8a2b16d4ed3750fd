"""Modified Merkle Patricia trie with canonical encoding and SHA-256 hashing.

A sixteen-way radix trie over nibble paths with three node kinds:

* Leaf       -- remaining key path plus the stored value
* Extension  -- a shared path segment above a branch
* Branch     -- sixteen child slots plus an (unused here) value slot

Child references embed the child when its encoding is shorter than 32
bytes and carry its 32-byte hash otherwise. The root hash commits to the
entry set alone: it is independent of insertion order and of any
insert/delete history that reaches the same set.

Mutation uses path copying over an append-only content-addressed node
store, so a cheap `copy()` gives a snapshot that later mutations never
disturb. The same machinery doubles as the evaluator for pruned partial
tries: a store miss raises the trie's configured `on_missing` error,
which is how placeholder boundaries surface during proof verification
and transition restructuring.
"""

from __future__ import annotations

from typing import Iterator, Mapping, Optional, Type, Union

from .encoding import (
    EMPTY_LIST_ENCODING,
    EMPTY_ROOT,
    HASH_LEN,
    LIST_TAG,
    encode_bytes,
    encode_list,
    hash_bytes,
    hex_prefix_decode,
    hex_prefix_encode,
    is_canonical_value,
    key_to_nibbles,
    nibbles_to_bytes,
    read_varint,
    to_hex,
)
from .errors import CorruptNode, DuplicateKey, MalformedNode, NonCanonicalValue, SmartSyncError

LEAF_KIND = b"\x00"
EXTENSION_KIND = b"\x01"
BRANCH_KIND = b"\x02"

INLINE_LIMIT = 32

Nibbles = tuple[int, ...]


class Leaf:
    __slots__ = ("path", "value", "_enc")

    def __init__(self, path: Nibbles, value: bytes):
        self.path = path
        self.value = value
        self._enc: Optional[bytes] = None

    def __repr__(self) -> str:
        return f"Leaf({''.join(f'{n:x}' for n in self.path)!r}, {self.value.hex()})"


class Extension:
    __slots__ = ("path", "child", "_enc")

    def __init__(self, path: Nibbles, child: "Ref"):
        self.path = path
        self.child = child
        self._enc: Optional[bytes] = None

    def __repr__(self) -> str:
        return f"Extension({''.join(f'{n:x}' for n in self.path)!r})"


class Branch:
    __slots__ = ("children", "value", "_enc")

    def __init__(self, children: tuple, value: Optional[bytes] = None):
        self.children = children
        self.value = value
        self._enc: Optional[bytes] = None

    def __repr__(self) -> str:
        slots = "".join(f"{i:x}" for i, c in enumerate(self.children) if c is not None)
        return f"Branch(slots={slots})"


Node = Union[Leaf, Extension, Branch]
# A reference is a 32-byte hash or the inline child itself (encoding < 32 bytes).
Ref = Union[bytes, Leaf, Extension, Branch]

EMPTY_CHILDREN: tuple = (None,) * 16


def encode_node(node: Node) -> bytes:
    """Canonical encoding; cached on the node (nodes are never mutated)."""
    enc = node._enc
    if enc is not None:
        return enc
    if isinstance(node, Leaf):
        enc = encode_list([
            encode_bytes(LEAF_KIND),
            encode_bytes(hex_prefix_encode(node.path, True)),
            encode_bytes(node.value),
        ])
    elif isinstance(node, Extension):
        enc = encode_list([
            encode_bytes(EXTENSION_KIND),
            encode_bytes(hex_prefix_encode(node.path, False)),
            _encode_ref(node.child),
        ])
    else:
        items = [encode_bytes(BRANCH_KIND)]
        for ref in node.children:
            items.append(encode_bytes(b"") if ref is None else _encode_ref(ref))
        items.append(encode_bytes(node.value or b""))
        enc = encode_list(items)
    node._enc = enc
    return enc


def _encode_ref(ref: Ref) -> bytes:
    if isinstance(ref, bytes):
        return encode_bytes(ref)
    return encode_node(ref)


def node_hash(node: Node) -> bytes:
    return hash_bytes(encode_node(node))


def decode_node(data: bytes) -> Optional[Node]:
    """Strict inverse of encode_node; returns None for the empty encoding.

    Raises MalformedNode for anything that is not a canonical encoding,
    including non-minimal varints, bad hex-prefix padding, wrong item
    counts, empty leaf values, under-occupied branches and inline children
    at or above the 32-byte limit.
    """
    try:
        node, end = _decode_item(data, 0, top=True)
    except ValueError as exc:
        raise MalformedNode(str(exc)) from None
    if end != len(data):
        raise MalformedNode("trailing bytes after node encoding")
    return node


def _decode_item(data: bytes, pos: int, top: bool) -> tuple[Optional[Node], int]:
    if pos >= len(data) or data[pos] != LIST_TAG:
        raise ValueError("node encoding must be a list")
    start = pos
    count, pos = read_varint(data, pos + 1)
    if count == 0:
        if not top:
            raise ValueError("empty node nested inside another node")
        return None, pos
    items: list = []  # bytes for byte-string items, Node for inline lists
    for _ in range(count):
        if pos >= len(data):
            raise ValueError("truncated node item")
        if data[pos] == LIST_TAG:
            inline_start = pos
            node, pos = _decode_item(data, pos, top=False)
            if pos - inline_start >= INLINE_LIMIT:
                raise ValueError("inline child at or above the hash threshold")
            items.append(node)
        else:
            length, pos = read_varint(data, pos)
            end = pos + length
            if end > len(data):
                raise ValueError("truncated byte string")
            items.append(data[pos:end])
            pos = end
    node = _node_from_items(items)
    node._enc = data[start:pos]
    return node, pos


def _node_from_items(items: list) -> Node:
    kind = items[0]
    if not isinstance(kind, bytes) or len(kind) != 1:
        raise ValueError("missing node kind tag")
    if kind == LEAF_KIND:
        if len(items) != 3:
            raise ValueError("leaf must have 3 items")
        path, is_leaf = _decode_path(items[1])
        if not is_leaf:
            raise ValueError("leaf tag with extension path flag")
        value = items[2]
        if not isinstance(value, bytes) or len(value) == 0:
            raise ValueError("leaf value must be a non-empty byte string")
        return Leaf(path, value)
    if kind == EXTENSION_KIND:
        if len(items) != 3:
            raise ValueError("extension must have 3 items")
        path, is_leaf = _decode_path(items[1])
        if is_leaf:
            raise ValueError("extension tag with leaf path flag")
        if not path:
            raise ValueError("extension path must be non-empty")
        child = _ref_from_item(items[2])
        if child is None:
            raise ValueError("extension child must be present")
        return Extension(path, child)
    if kind == BRANCH_KIND:
        if len(items) != 18:
            raise ValueError("branch must have 18 items")
        children = tuple(_ref_from_item(item) for item in items[1:17])
        value_item = items[17]
        if not isinstance(value_item, bytes):
            raise ValueError("branch value must be a byte string")
        value = value_item or None
        occupied = sum(1 for c in children if c is not None) + (value is not None)
        if occupied < 2:
            raise ValueError("branch with fewer than 2 occupied slots")
        return Branch(children, value)
    raise ValueError(f"unknown node kind 0x{kind.hex()}")


def _decode_path(item) -> tuple[Nibbles, bool]:
    if not isinstance(item, bytes):
        raise ValueError("path must be a byte string")
    return hex_prefix_decode(item)


def _ref_from_item(item) -> Optional[Ref]:
    if isinstance(item, bytes):
        if len(item) == 0:
            return None
        if len(item) == HASH_LEN:
            return item
        raise ValueError("child reference must be empty, a hash, or inline")
    return item  # inline node, already decoded


class NodeStore:
    """Append-only content-addressed store: hash -> canonical encoding."""

    __slots__ = ("_encodings", "_decoded")

    def __init__(self, encodings: Optional[Mapping[bytes, bytes]] = None):
        self._encodings: dict[bytes, bytes] = dict(encodings) if encodings else {}
        self._decoded: dict[bytes, Optional[Node]] = {}

    def put(self, digest: bytes, encoding: bytes) -> None:
        self._encodings[digest] = encoding

    def __contains__(self, digest: bytes) -> bool:
        return digest in self._encodings

    def __len__(self) -> int:
        return len(self._encodings)

    def encoding(self, digest: bytes) -> Optional[bytes]:
        return self._encodings.get(digest)

    def node(self, digest: bytes) -> Optional[Node]:
        """Decode (memoized). Raises KeyError when the hash is unknown."""
        if digest in self._decoded:
            return self._decoded[digest]
        enc = self.encoding(digest)
        if enc is None:
            raise KeyError(digest)
        node = decode_node(enc)
        self._decoded[digest] = node
        return node


class Trie:
    """Mutable trie handle over a shared node store.

    `canonical` enforces the stored-value rules (1..32 bytes, no leading
    zero); the account trie disables it because its values are encoded
    account tuples. `on_missing` is the error raised when a hash
    reference cannot be resolved: CorruptNode for real tries, the
    placeholder errors for pruned partial tries.
    """

    __slots__ = ("store", "canonical", "on_missing", "root_node")

    def __init__(
        self,
        store: Optional[NodeStore] = None,
        root: Union[None, bytes, Node] = None,
        *,
        canonical: bool = True,
        on_missing: Type[SmartSyncError] = CorruptNode,
    ):
        self.store = store if store is not None else NodeStore()
        self.canonical = canonical
        self.on_missing = on_missing
        if isinstance(root, bytes):
            self.root_node = None if root == EMPTY_ROOT else self.resolve(root)
        else:
            self.root_node = root

    @classmethod
    def from_entries(cls, entries, **kwargs) -> "Trie":
        """Bulk build; equivalent to sequential inserts in any order."""
        if isinstance(entries, Mapping):
            entries = entries.items()
        trie = cls(**kwargs)
        seen: set[bytes] = set()
        for key, value in entries:
            if key in seen:
                raise DuplicateKey(to_hex(key))
            seen.add(key)
            trie.insert(key, value)
        return trie

    @classmethod
    def at_root(cls, store: NodeStore, root_hash: bytes, **kwargs) -> "Trie":
        """Read view of a previously committed trie."""
        return cls(store=store, root=root_hash, **kwargs)

    def copy(self) -> "Trie":
        """O(1) snapshot: the store is append-only and nodes are immutable."""
        return Trie(
            store=self.store,
            root=self.root_node,
            canonical=self.canonical,
            on_missing=self.on_missing,
        )

    # --- reference plumbing ---------------------------------------------

    def resolve(self, ref: Ref) -> Node:
        if isinstance(ref, bytes):
            try:
                node = self.store.node(ref)
            except KeyError:
                raise self.on_missing(to_hex(ref)) from None
            except MalformedNode as exc:
                raise CorruptNode(str(exc)) from None
            if node is None:
                raise CorruptNode("empty encoding referenced as a child")
            return node
        return ref

    def _make_ref(self, node: Node) -> Ref:
        enc = encode_node(node)
        if len(enc) < INLINE_LIMIT:
            return node
        digest = hash_bytes(enc)
        self.store.put(digest, enc)
        return digest

    # --- public operations ------------------------------------------------

    def root_hash(self) -> bytes:
        """Commit and hash the root; constant H(empty list) for no entries."""
        if self.root_node is None:
            self.store.put(EMPTY_ROOT, EMPTY_LIST_ENCODING)
            return EMPTY_ROOT
        enc = encode_node(self.root_node)
        digest = hash_bytes(enc)
        self.store.put(digest, enc)
        return digest

    def get(self, key: bytes) -> Optional[bytes]:
        node = self.root_node
        path = key_to_nibbles(key)
        while True:
            if node is None:
                return None
            if isinstance(node, Leaf):
                return node.value if path == node.path else None
            if isinstance(node, Extension):
                length = len(node.path)
                if path[:length] != node.path:
                    return None
                path = path[length:]
                node = self.resolve(node.child)
                continue
            if not path:
                return node.value
            ref = node.children[path[0]]
            if ref is None:
                return None
            node = self.resolve(ref)
            path = path[1:]

    def insert(self, key: bytes, value: bytes) -> None:
        if not isinstance(value, bytes) or len(value) == 0:
            raise NonCanonicalValue("value must be a non-empty byte string")
        if self.canonical and not is_canonical_value(value):
            raise NonCanonicalValue(
                f"value {to_hex(value)} is not canonical (1..32 bytes, no leading zero)"
            )
        self.root_node = self._insert(self.root_node, key_to_nibbles(key), value)

    def delete(self, key: bytes) -> None:
        """Remove a key; absent keys are a no-op. Collapses branch remnants."""
        self.root_node = self._delete(self.root_node, key_to_nibbles(key))

    def __contains__(self, key: bytes) -> bool:
        return self.get(key) is not None

    def __len__(self) -> int:
        return sum(1 for _ in self.items())

    def items(self) -> Iterator[tuple[bytes, bytes]]:
        """All entries in ascending key order."""
        yield from self._items(self.root_node, ())

    def _items(self, node: Optional[Node], prefix: Nibbles):
        if node is None:
            return
        if isinstance(node, Leaf):
            yield nibbles_to_bytes(prefix + node.path), node.value
            return
        if isinstance(node, Extension):
            yield from self._items(self.resolve(node.child), prefix + node.path)
            return
        if node.value is not None:
            yield nibbles_to_bytes(prefix), node.value
        for i, ref in enumerate(node.children):
            if ref is not None:
                yield from self._items(self.resolve(ref), prefix + (i,))

    # --- insertion -----------------------------------------------------------

    def _insert(self, node: Optional[Node], path: Nibbles, value: bytes) -> Node:
        if node is None:
            return Leaf(path, value)
        if isinstance(node, Leaf):
            return self._insert_at_leaf(node, path, value)
        if isinstance(node, Extension):
            return self._insert_at_extension(node, path, value)
        return self._insert_at_branch(node, path, value)

    def _insert_at_leaf(self, node: Leaf, path: Nibbles, value: bytes) -> Node:
        common = _common_prefix(path, node.path)
        if len(common) == len(path) == len(node.path):
            return Leaf(path, value)
        children = list(EMPTY_CHILDREN)
        branch_value = None
        for tail, val in ((node.path[len(common):], node.value), (path[len(common):], value)):
            if not tail:
                branch_value = val
            else:
                children[tail[0]] = self._make_ref(Leaf(tail[1:], val))
        branch = Branch(tuple(children), branch_value)
        if common:
            return Extension(common, self._make_ref(branch))
        return branch

    def _insert_at_extension(self, node: Extension, path: Nibbles, value: bytes) -> Node:
        common = _common_prefix(path, node.path)
        if len(common) == len(node.path):
            child = self.resolve(node.child)
            new_child = self._insert(child, path[len(common):], value)
            return Extension(node.path, self._make_ref(new_child))
        # Split the extension at the divergence point.
        children = list(EMPTY_CHILDREN)
        branch_value = None
        ext_tail = node.path[len(common):]
        if len(ext_tail) == 1:
            children[ext_tail[0]] = node.child
        else:
            children[ext_tail[0]] = self._make_ref(Extension(ext_tail[1:], node.child))
        key_tail = path[len(common):]
        if not key_tail:
            branch_value = value
        else:
            children[key_tail[0]] = self._make_ref(Leaf(key_tail[1:], value))
        branch = Branch(tuple(children), branch_value)
        if common:
            return Extension(common, self._make_ref(branch))
        return branch

    def _insert_at_branch(self, node: Branch, path: Nibbles, value: bytes) -> Node:
        if not path:
            return Branch(node.children, value)
        slot = path[0]
        ref = node.children[slot]
        child = self.resolve(ref) if ref is not None else None
        new_child = self._insert(child, path[1:], value)
        children = node.children[:slot] + (self._make_ref(new_child),) + node.children[slot + 1:]
        return Branch(children, node.value)

    # --- deletion ---------------------------------------------------------------

    def _delete(self, node: Optional[Node], path: Nibbles) -> Optional[Node]:
        if node is None:
            return None
        if isinstance(node, Leaf):
            return None if path == node.path else node
        if isinstance(node, Extension):
            length = len(node.path)
            if path[:length] != node.path:
                return node
            child = self.resolve(node.child)
            new_child = self._delete(child, path[length:])
            if new_child is child:
                return node
            if new_child is None:
                return None
            return self._join_extension(node.path, new_child)
        # Branch
        if not path:
            if node.value is None:
                return node
            return self._normalize_branch(node.children, None)
        slot = path[0]
        ref = node.children[slot]
        if ref is None:
            return node
        child = self.resolve(ref)
        new_child = self._delete(child, path[1:])
        if new_child is child:
            return node
        new_ref = None if new_child is None else self._make_ref(new_child)
        children = node.children[:slot] + (new_ref,) + node.children[slot + 1:]
        return self._normalize_branch(children, node.value)

    def _join_extension(self, path: Nibbles, child: Node) -> Node:
        """Merge an extension with its replacement child after deletion."""
        if isinstance(child, Leaf):
            return Leaf(path + child.path, child.value)
        if isinstance(child, Extension):
            return Extension(path + child.path, child.child)
        return Extension(path, self._make_ref(child))

    def _normalize_branch(self, children: tuple, value: Optional[bytes]) -> Optional[Node]:
        """Collapse a branch left with fewer than two occupied slots."""
        occupied = [i for i, ref in enumerate(children) if ref is not None]
        count = len(occupied) + (value is not None)
        if count >= 2:
            return Branch(children, value)
        if count == 0:
            return None
        if value is not None:
            return Leaf((), value)
        slot = occupied[0]
        child = self.resolve(children[slot])
        if isinstance(child, Leaf):
            return Leaf((slot,) + child.path, child.value)
        if isinstance(child, Extension):
            return Extension((slot,) + child.path, child.child)
        return Extension((slot,), children[slot])

    # --- auditing -------------------------------------------------------------------

    def check_invariants(self) -> None:
        """Structural audit: collapse correctness, path rules, hash integrity."""
        if self.root_node is not None:
            self._audit(self.root_node, is_root=True)

    def _audit(self, node: Node, is_root: bool = False) -> None:
        enc = encode_node(node)
        if not is_root:
            assert len(enc) < INLINE_LIMIT or hash_bytes(enc) in self.store._encodings
        if isinstance(node, Leaf):
            assert len(node.value) > 0, "leaf with empty value"
            return
        if isinstance(node, Extension):
            assert len(node.path) > 0, "extension with empty path"
            child = self._audit_ref(node.child)
            assert isinstance(child, Branch), "extension child must be a branch"
            self._audit(child)
            return
        occupied = sum(1 for ref in node.children if ref is not None)
        occupied += node.value is not None
        assert occupied >= 2, "branch with fewer than 2 occupied slots"
        for ref in node.children:
            if ref is not None:
                self._audit(self._audit_ref(ref))

    def _audit_ref(self, ref: Ref) -> Node:
        if isinstance(ref, bytes):
            stored = self.store.encoding(ref)
            assert stored is not None, "dangling hash reference"
            assert hash_bytes(stored) == ref, "stored encoding does not re-hash to its key"
            assert len(stored) >= INLINE_LIMIT, "hash reference to an inline-sized node"
        else:
            assert len(encode_node(ref)) < INLINE_LIMIT, "inline node at hash size"
        return self.resolve(ref)


def _common_prefix(a: Nibbles, b: Nibbles) -> Nibbles:
    limit = min(len(a), len(b))
    i = 0
    while i < limit and a[i] == b[i]:
        i += 1
    return a[:i]
