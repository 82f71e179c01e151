"""Append-only k-ary Merkle tree over scalars with root history and tombstones."""

from __future__ import annotations

import struct
from dataclasses import dataclass

from .encoding import from_json, to_json
from .hashing import hash_sponge
from .jubjub import Scalar

DEFAULT_ARITY = 4
DEFAULT_DEPTH = 17

EMPTY_LEAF = hash_sponge([int.from_bytes(b"EMPTY", "little")])
TOMBSTONE = hash_sponge([int.from_bytes(b"REVOKED", "little")])

_MAGIC = b"CMT1"


class TreeFull(Exception):
    pass


class VacantPosition(LookupError):
    pass


class MalformedProof(ValueError):
    pass


@dataclass(frozen=True)
class MerkleProof:
    leaf: Scalar
    pos: int
    siblings: tuple[tuple[Scalar, ...], ...]
    child_indices: tuple[int, ...]

    def to_json(self) -> dict:
        return to_json(self)

    @classmethod
    def from_json(cls, doc: dict) -> MerkleProof:
        return from_json(cls, doc)


def empty_roots(arity: int, depth: int) -> list[Scalar]:
    """Hash of an all-empty subtree for every height 0..depth."""
    out = [EMPTY_LEAF]
    for _ in range(depth):
        out.append(hash_sponge([out[-1]] * arity))
    return out


_EMPTY_CACHE: dict[tuple[int, int], list[Scalar]] = {}


def _empty(arity: int, depth: int) -> list[Scalar]:
    key = (arity, depth)
    if key not in _EMPTY_CACHE:
        _EMPTY_CACHE[key] = empty_roots(arity, depth)
    return _EMPTY_CACHE[key]


def verify(root: int, proof: MerkleProof, arity: int | None = None) -> bool:
    """Recompute the path from ``proof.leaf`` and compare with ``root``.

    Without ``arity`` the width is read off the proof; every level must
    then agree with the first.
    """
    depth = len(proof.child_indices)
    if len(proof.siblings) != depth:
        raise MalformedProof("sibling levels and child indices differ in length")
    if arity is None:
        if not depth:
            raise MalformedProof("empty proof")
        arity = len(proof.siblings[0]) + 1
        if arity < 2:
            raise MalformedProof("proof has no siblings")
    pos = 0
    for level in reversed(range(depth)):
        idx = proof.child_indices[level]
        if not 0 <= idx < arity:
            raise MalformedProof("child index out of range")
        if len(proof.siblings[level]) != arity - 1:
            raise MalformedProof("wrong number of siblings")
        pos = pos * arity + idx
    if pos != proof.pos:
        return False
    node = proof.leaf
    for idx, sibs in zip(proof.child_indices, proof.siblings):
        children = list(sibs)
        children.insert(idx, node)
        node = hash_sponge(children)
    return node == root


class MerkleTree:
    """Incremental tree; level 0 holds the leaves, level ``depth`` the root."""

    def __init__(self, arity: int = DEFAULT_ARITY, depth: int = DEFAULT_DEPTH):
        if arity < 2 or depth < 1:
            raise ValueError("arity must be >= 2 and depth >= 1")
        self.arity = arity
        self.depth = depth
        self.capacity = arity ** depth
        self._empty = _empty(arity, depth)
        self._nodes: list[dict[int, Scalar]] = [{} for _ in range(depth + 1)]
        self.leaves: list[Scalar] = []
        self.root_history: list[Scalar] = [self.root]
        self._known_roots = {self.root: 0}

    @property
    def root(self) -> Scalar:
        return self._nodes[self.depth].get(0, self._empty[self.depth])

    def __len__(self) -> int:
        return len(self.leaves)

    def node(self, level: int, index: int) -> Scalar:
        return self._nodes[level].get(index, self._empty[level])

    def is_known_root(self, root: int) -> bool:
        return root in self._known_roots

    def root_index(self, root: int) -> int | None:
        """Latest index of ``root`` in the root history, if it was ever a root."""
        return self._known_roots.get(root)

    def _record_root(self) -> None:
        self.root_history.append(self.root)
        self._known_roots[self.root] = len(self.root_history) - 1

    def _rehash_path(self, pos: int) -> None:
        k = self.arity
        idx = pos
        for level in range(self.depth):
            parent = idx // k
            children = [self.node(level, parent * k + j) for j in range(k)]
            self._nodes[level + 1][parent] = hash_sponge(children)
            idx = parent

    def append(self, leaf: int) -> tuple[int, Scalar]:
        if len(self.leaves) >= self.capacity:
            raise TreeFull(f"tree holds {self.capacity} leaves")
        pos = len(self.leaves)
        self.leaves.append(Scalar(leaf))
        self._nodes[0][pos] = Scalar(leaf)
        self._rehash_path(pos)
        self._record_root()
        return pos, self.root

    def _check_occupied(self, pos: int) -> None:
        if not 0 <= pos < len(self.leaves):
            raise VacantPosition(f"position {pos} is not occupied")

    def prove(self, pos: int) -> MerkleProof:
        self._check_occupied(pos)
        k = self.arity
        siblings, indices = [], []
        idx = pos
        for level in range(self.depth):
            parent, child = divmod(idx, k)
            siblings.append(tuple(
                self.node(level, parent * k + j) for j in range(k) if j != child
            ))
            indices.append(child)
            idx = parent
        return MerkleProof(self.leaves[pos], pos, tuple(siblings), tuple(indices))

    def invalidate(self, pos: int) -> Scalar:
        """Overwrite the leaf at ``pos`` with the tombstone constant."""
        self._check_occupied(pos)
        if self.leaves[pos] == TOMBSTONE:
            return self.root
        self.leaves[pos] = TOMBSTONE
        self._nodes[0][pos] = TOMBSTONE
        self._rehash_path(pos)
        self._record_root()
        return self.root

    def verify(self, proof: MerkleProof, root: int | None = None) -> bool:
        return verify(self.root if root is None else root, proof, self.arity)

    # -- bulk construction and serialization --------------------------------

    @classmethod
    def from_leaves(cls, leaves, arity: int = DEFAULT_ARITY, depth: int = DEFAULT_DEPTH,
                    root_history=None) -> MerkleTree:
        """Rebuild level by level; root history defaults to just the final root."""
        tree = cls(arity, depth)
        leaves = [Scalar(x) for x in leaves]
        if len(leaves) > tree.capacity:
            raise TreeFull(f"tree holds {tree.capacity} leaves")
        tree.leaves = leaves
        tree._nodes[0] = dict(enumerate(leaves))
        width = len(leaves)
        for level in range(depth):
            parents = (width + arity - 1) // arity
            tree._nodes[level + 1] = {
                p: hash_sponge([tree.node(level, p * arity + j) for j in range(arity)])
                for p in range(parents)
            }
            width = parents
        if root_history is None:
            root_history = [tree.root]
        tree.root_history = [Scalar(r) for r in root_history]
        tree._known_roots = {r: i for i, r in enumerate(tree.root_history)}
        if tree.root_history[-1] != tree.root:
            raise ValueError("root history does not end at the rebuilt root")
        return tree

    def to_bytes(self) -> bytes:
        head = _MAGIC + struct.pack("<BBQ", self.arity, self.depth, len(self.leaves))
        return head + b"".join(x.to_bytes(32, "little") for x in self.leaves)

    @classmethod
    def from_bytes(cls, data: bytes) -> MerkleTree:
        if data[:4] != _MAGIC or len(data) < 14:
            raise ValueError("not a tree file")
        arity, depth, count = struct.unpack("<BBQ", data[4:14])
        body = data[14:]
        if len(body) != 32 * count:
            raise ValueError("tree file is truncated or has trailing bytes")
        leaves = [int.from_bytes(body[i:i + 32], "little") for i in range(0, len(body), 32)]
        return cls.from_leaves(leaves, arity, depth)
