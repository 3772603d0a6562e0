"""The K-tree: a height balanced cluster tree built by k-means node splits.

Leaves hold documents.  Internal nodes hold ``(centre, child, count)``
entries, where ``count`` is the number of documents beneath ``child``.

Two modes are supported:

``classic``
    Centres are dense means of every document beneath the entry, kept exact
    under insertion and removal by incremental (de)updates.
``medoid``
    Centres are references to stored documents (exemplars chosen by k-means
    at split time) and are never moved by insertion.

Levels are numbered from the leaves: leaves are level 1 and the root is at
level ``depth``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from .kmeans import PointSet, kmeans, select_medoids
from .solution import ClusteringSolution
from .vectors import (
    INDEX_DTYPE,
    WEIGHT_DTYPE,
    SparseBlock,
    SparseVector,
    Vector,
    dim_of,
    sparsify,
    squared_euclidean,
)

CLASSIC = "classic"
MEDOID = "medoid"
MODES = (CLASSIC, MEDOID)


@dataclass(frozen=True)
class KTreeConfig:
    order: int = 10
    mode: str = CLASSIC
    split_k: int = 2
    seed: int = 0

    def __post_init__(self) -> None:
        if self.order < 2:
            raise ValueError(f"order must be >= 2, got {self.order}")
        if not 2 <= self.split_k <= self.order:
            raise ValueError(f"split_k must lie in [2, order], got {self.split_k}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


class InvariantError(AssertionError):
    pass


class LeafNode:
    __slots__ = ("parent", "ids", "vectors", "_block")
    is_leaf = True

    def __init__(self, parent: Optional["InternalNode"] = None) -> None:
        self.parent = parent
        self.ids: list[int] = []
        self.vectors: list[SparseVector] = []
        self._block: SparseBlock | None = None

    @property
    def n(self) -> int:
        return len(self.ids)

    def block(self) -> SparseBlock:
        if self._block is None:
            self._block = SparseBlock(self.vectors)
        return self._block

    def distances(self, q: Vector) -> np.ndarray:
        return self.block().sqdist(q)


class InternalNode:
    """Entries are parallel lists: ``children``, ``counts`` and the centres.

    Classic nodes keep, per entry, the dense sum of the subtree's vectors and
    that sum's squared norm; the centre is ``sum / count``.  Inserting a
    document then touches only its non-zero coordinates.  Medoid nodes keep
    the exemplar doc ids and their (shared, not copied) vectors.
    """

    __slots__ = ("parent", "children", "counts", "sums", "sum_sqnorms", "centre_ids", "centre_vecs", "_block")
    is_leaf = False

    def __init__(self, parent: Optional["InternalNode"] = None) -> None:
        self.parent = parent
        self.children: list[Node] = []
        self.counts: list[int] = []
        self.sums: np.ndarray | None = None
        self.sum_sqnorms: np.ndarray | None = None
        self.centre_ids: list[int] | None = None
        self.centre_vecs: list[SparseVector] | None = None
        self._block: SparseBlock | None = None

    @property
    def n(self) -> int:
        return len(self.children)

    @property
    def medoid(self) -> bool:
        return self.centre_ids is not None

    @property
    def centres(self) -> np.ndarray:
        """Dense centre rows (a fresh array) for classic nodes."""
        return self.sums / np.asarray(self.counts, dtype=WEIGHT_DTYPE)[:, None]

    def block(self) -> SparseBlock:
        if self._block is None:
            self._block = SparseBlock(self.centre_vecs)
        return self._block

    def distances(self, q: Vector) -> np.ndarray:
        if self.centre_ids is not None:
            return self.block().sqdist(q)
        # |q - s/c|^2 = |q|^2 - 2 q.s / c + |s|^2 / c^2, gathered on q's support
        c = np.asarray(self.counts, dtype=WEIGHT_DTYPE)
        if isinstance(q, SparseVector):
            cross = self.sums[:, q.indices] @ q.values
            qn = q.sqnorm
        else:
            cross = self.sums @ q
            qn = float(q @ q)
        out = self.sum_sqnorms / (c * c) - 2.0 * cross / c
        out += qn
        np.maximum(out, 0.0, out=out)
        return out

    def centre(self, j: int) -> Vector:
        if self.centre_ids is not None:
            return self.centre_vecs[j]
        return self.sums[j] / self.counts[j]

    def set_entries(self, children, counts, sums=None, exemplars=None) -> None:
        self.children = list(children)
        self.counts = [int(c) for c in counts]
        for child in self.children:
            child.parent = self
        if exemplars is not None:
            self.centre_ids = [d for d, _ in exemplars]
            self.centre_vecs = [v for _, v in exemplars]
            self._block = None
        else:
            self.sums = np.array(sums, dtype=WEIGHT_DTYPE)
            self.sum_sqnorms = np.einsum("ij,ij->i", self.sums, self.sums)

    def replace_entry(self, j: int, children, counts, sums=None, exemplars=None) -> None:
        """Swap entry ``j`` for several new entries, in place."""
        for child in children:
            child.parent = self
        self.children[j : j + 1] = children
        self.counts[j : j + 1] = [int(c) for c in counts]
        if self.centre_ids is not None:
            self.centre_ids[j : j + 1] = [d for d, _ in exemplars]
            self.centre_vecs[j : j + 1] = [v for _, v in exemplars]
            self._block = None
        else:
            sums = np.asarray(sums, dtype=WEIGHT_DTYPE)
            self.sums = np.concatenate([self.sums[:j], sums, self.sums[j + 1 :]])
            norms = np.einsum("ij,ij->i", sums, sums)
            self.sum_sqnorms = np.concatenate([self.sum_sqnorms[:j], norms, self.sum_sqnorms[j + 1 :]])

    def remove_entry(self, j: int) -> None:
        del self.children[j]
        del self.counts[j]
        if self.centre_ids is not None:
            del self.centre_ids[j]
            del self.centre_vecs[j]
            self._block = None
        else:
            self.sums = np.delete(self.sums, j, axis=0)
            self.sum_sqnorms = np.delete(self.sum_sqnorms, j)

    def add_to_mean(self, j: int, v: SparseVector) -> None:
        row = self.sums[j]
        # |s + v|^2 = |s|^2 + 2 s.v + |v|^2
        self.sum_sqnorms[j] += 2.0 * float(row[v.indices] @ v.values) + v.sqnorm
        row[v.indices] += v.values
        self.counts[j] += 1

    def remove_from_mean(self, j: int, v: SparseVector) -> None:
        row = self.sums[j]
        row[v.indices] -= v.values
        # recomputed rather than downdated: cancellation would leave a residue
        self.sum_sqnorms[j] = row @ row
        self.counts[j] -= 1


Node = "LeafNode | InternalNode"


@dataclass
class TreeStats:
    size: int
    depth: int
    nodes_per_level: dict[int, int] = field(default_factory=dict)
    leaf_count: int = 0
    mean_leaf_occupancy: float = 0.0

    @property
    def node_count(self) -> int:
        return sum(self.nodes_per_level.values())

    def as_dict(self) -> dict:
        return {
            "size": self.size,
            "depth": self.depth,
            "node_count": self.node_count,
            "nodes_per_level": {str(k): v for k, v in sorted(self.nodes_per_level.items())},
            "leaf_count": self.leaf_count,
            "mean_leaf_occupancy": self.mean_leaf_occupancy,
        }


class KTree:
    """Order-``m`` K-tree over sparse document vectors.

    >>> tree = KTree(KTreeConfig(order=4))
    >>> for i, v in enumerate(vectors):       # doctest: +SKIP
    ...     tree.insert(i, v)
    >>> tree.nearest(vectors[0])              # doctest: +SKIP
    (0, 0.0)

    Mutation is single-writer; concurrent readers are safe between writes.
    """

    def __init__(self, config: KTreeConfig | None = None, **kwargs) -> None:
        self.config = config if config is not None else KTreeConfig(**kwargs)
        self.root: LeafNode | InternalNode | None = None
        self.depth = 0
        self.dim: int | None = None
        self.n_splits = 0
        self._leaf_of: dict[int, LeafNode] = {}

    # -- basic queries ---------------------------------------------------

    @property
    def order(self) -> int:
        return self.config.order

    @property
    def mode(self) -> str:
        return self.config.mode

    @property
    def size(self) -> int:
        return len(self._leaf_of)

    def __len__(self) -> int:
        return len(self._leaf_of)

    def __contains__(self, doc_id: int) -> bool:
        return doc_id in self._leaf_of

    def doc_ids(self) -> list[int]:
        return sorted(self._leaf_of)

    def vector(self, doc_id: int) -> SparseVector:
        leaf = self._leaf_of[doc_id]
        return leaf.vectors[leaf.ids.index(doc_id)]

    def leaf_of(self, doc_id: int) -> LeafNode:
        return self._leaf_of[doc_id]

    # -- insertion -------------------------------------------------------

    def _as_query(self, v: Vector) -> Vector:
        if self.dim is not None and dim_of(v) != self.dim:
            raise ValueError(f"dimension mismatch: tree has {self.dim}, vector has {dim_of(v)}")
        return v

    def insert(self, doc_id: int, v: Vector) -> None:
        """Insert document ``doc_id`` with vector ``v``."""
        if doc_id in self._leaf_of:
            raise ValueError(f"duplicate doc_id {doc_id}")
        if not isinstance(v, SparseVector):
            v = sparsify(np.asarray(v, dtype=WEIGHT_DTYPE))
        self._as_query(v)
        if self.root is None:
            self.root = LeafNode()
            self.depth = 1
            self.dim = v.dim

        classic = self.config.mode == CLASSIC
        node = self.root
        while not node.is_leaf:
            j = int(np.argmin(node.distances(v)))
            if classic:
                node.add_to_mean(j, v)
            else:
                node.counts[j] += 1
            node = node.children[j]

        node.ids.append(doc_id)
        node.vectors.append(v)
        node._block = None
        self._leaf_of[doc_id] = node
        if node.n > self.config.order:
            self._split(node)

    def extend(self, items: Iterable[tuple[int, Vector]]) -> None:
        for doc_id, v in items:
            self.insert(doc_id, v)

    def _split(self, node) -> None:
        cfg = self.config
        k = cfg.split_k
        seed = [cfg.seed, self.n_splits]
        self.n_splits += 1
        classic = cfg.mode == CLASSIC

        if node.is_leaf:
            ps = PointSet(node.vectors)
            res = kmeans(ps, k, seed)
            groups = [res.members(j) for j in range(k)]
            new_nodes = []
            for g in groups:
                leaf = LeafNode()
                leaf.ids = [node.ids[i] for i in g]
                leaf.vectors = [node.vectors[i] for i in g]
                for d in leaf.ids:
                    self._leaf_of[d] = leaf
                new_nodes.append(leaf)
            counts = [len(g) for g in groups]
            if classic:
                sums = res.centroids * np.asarray(counts, dtype=WEIGHT_DTYPE)[:, None]
                self._attach(node, new_nodes, counts, sums=sums)
            else:
                med = select_medoids(ps, res)
                self._attach(node, new_nodes, counts, exemplars=[(node.ids[i], node.vectors[i]) for i in med])
            return

        if classic:
            # weighted k-means over the centres clusters the underlying documents' means
            ps = PointSet(node.centres)
            res = kmeans(ps, k, seed, weights=np.asarray(node.counts, dtype=WEIGHT_DTYPE))
        else:
            ps = PointSet(node.centre_vecs)
            res = kmeans(ps, k, seed)
        groups = [res.members(j) for j in range(k)]
        new_nodes = []
        for g in groups:
            child = InternalNode()
            kids = [node.children[i] for i in g]
            cnts = [node.counts[i] for i in g]
            if classic:
                child.set_entries(kids, cnts, sums=node.sums[g])
            else:
                child.set_entries(
                    kids, cnts, exemplars=[(node.centre_ids[i], node.centre_vecs[i]) for i in g]
                )
            new_nodes.append(child)
        counts = [sum(node.counts[i] for i in g) for g in groups]
        if classic:
            self._attach(node, new_nodes, counts, sums=np.stack([node.sums[g].sum(axis=0) for g in groups]))
        else:
            med = select_medoids(ps, res)
            self._attach(
                node, new_nodes, counts, exemplars=[(node.centre_ids[i], node.centre_vecs[i]) for i in med]
            )

    def _attach(self, old, new_nodes, counts, sums=None, exemplars=None) -> None:
        parent = old.parent
        if parent is None:
            root = InternalNode()
            root.set_entries(new_nodes, counts, sums=sums, exemplars=exemplars)
            self.root = root
            self.depth += 1
            return
        j = parent.children.index(old)
        parent.replace_entry(j, new_nodes, counts, sums=sums, exemplars=exemplars)
        if parent.n > self.config.order:
            self._split(parent)

    # -- search ----------------------------------------------------------

    def find_leaf(self, q: Vector) -> LeafNode:
        """Follow the nearest centre at every level down to a leaf."""
        if self.root is None:
            raise LookupError("tree is empty")
        self._as_query(q)
        node = self.root
        while not node.is_leaf:
            node = node.children[int(np.argmin(node.distances(q)))]
        return node

    def nearest(self, q: Vector) -> tuple[int, float]:
        """Approximate nearest neighbour: ``(doc_id, squared distance)``.

        The search is greedy down the tree and exact within the leaf reached,
        so the distance returned is never below the true nearest distance.
        """
        leaf = self.find_leaf(q)
        i = int(np.argmin(leaf.distances(q)))
        return leaf.ids[i], squared_euclidean(q, leaf.vectors[i])

    def nearest_in_leaf(self, q: Vector, top: int = 1) -> list[tuple[int, float]]:
        """The ``top`` closest entries of the leaf ``q`` descends to."""
        leaf = self.find_leaf(q)
        order = np.argsort(leaf.distances(q), kind="stable")[: max(top, 0)]
        return [(leaf.ids[i], squared_euclidean(q, leaf.vectors[i])) for i in order.tolist()]

    # -- removal ---------------------------------------------------------

    def remove(self, doc_id: int) -> SparseVector:
        """Remove ``doc_id`` and return its vector."""
        try:
            leaf = self._leaf_of.pop(doc_id)
        except KeyError:
            raise KeyError(f"unknown doc_id {doc_id}") from None
        i = leaf.ids.index(doc_id)
        v = leaf.vectors[i]
        del leaf.ids[i]
        del leaf.vectors[i]
        leaf._block = None

        classic = self.config.mode == CLASSIC
        node = leaf
        while node.parent is not None:
            parent = node.parent
            j = parent.children.index(node)
            if node.n == 0:
                parent.remove_entry(j)
            elif classic:
                parent.remove_from_mean(j, v)
            else:
                parent.counts[j] -= 1
                if parent.centre_ids[j] == doc_id:
                    self._replace_exemplar(parent, j, v)
            node = parent

        root = self.root
        if root.n == 0:
            self.root = None
            self.depth = 0
            return v
        while not root.is_leaf and root.n == 1:
            root = root.children[0]
            root.parent = None
            self.depth -= 1
        self.root = root
        return v

    def _replace_exemplar(self, parent: InternalNode, j: int, old: SparseVector) -> None:
        # the new exemplar is the child's own entry nearest the departed one
        child = parent.children[j]
        if child.is_leaf:
            ids, vecs = child.ids, child.vectors
        else:
            ids, vecs = child.centre_ids, child.centre_vecs
        i = int(np.argmin(child.distances(old)))
        parent.centre_ids[j] = ids[i]
        parent.centre_vecs[j] = vecs[i]
        parent._block = None

    # -- traversal & extraction -----------------------------------------

    def iter_nodes(self) -> Iterator[tuple[LeafNode | InternalNode, int]]:
        """Preorder ``(node, level)`` pairs."""
        if self.root is None:
            return
        stack = [(self.root, self.depth)]
        while stack:
            node, level = stack.pop()
            yield node, level
            if not node.is_leaf:
                stack.extend((c, level - 1) for c in reversed(node.children))

    def nodes_at_level(self, level: int) -> list:
        return [n for n, lv in self.iter_nodes() if lv == level]

    @staticmethod
    def subtree_docs(node) -> list[int]:
        out: list[int] = []
        stack = [node]
        while stack:
            n = stack.pop()
            if n.is_leaf:
                out.extend(n.ids)
            else:
                stack.extend(n.children)
        return out

    def clusters_at_level(self, level: int = 1) -> ClusteringSolution:
        """One cluster per node at ``level`` (1 = leaves), in preorder."""
        if not 1 <= level <= self.depth:
            raise ValueError(f"level must lie in [1, {self.depth}], got {level}")
        return ClusteringSolution.from_clusters(self.subtree_docs(n) for n in self.nodes_at_level(level))

    def leaves(self) -> list[LeafNode]:
        return self.nodes_at_level(1) if self.root is not None else []

    def stats(self) -> TreeStats:
        per_level: dict[int, int] = {}
        occupancy = []
        for node, level in self.iter_nodes():
            per_level[level] = per_level.get(level, 0) + 1
            if node.is_leaf:
                occupancy.append(node.n)
        return TreeStats(
            size=self.size,
            depth=self.depth,
            nodes_per_level=per_level,
            leaf_count=len(occupancy),
            mean_leaf_occupancy=float(np.mean(occupancy)) if occupancy else 0.0,
        )

    # -- verification ----------------------------------------------------

    def check_invariants(self, atol: float = 1e-6) -> None:
        """Recompute everything from the leaves and compare; raise on mismatch."""
        if self.root is None:
            if self.depth != 0 or self._leaf_of:
                raise InvariantError("empty tree with non-zero depth or indexed docs")
            return
        if self.root.parent is not None:
            raise InvariantError("root has a parent")
        m = self.config.order
        seen: set[int] = set()
        classic = self.config.mode == CLASSIC

        def visit(node, level):
            # returns (sum vector or None, count)
            if not 1 <= node.n <= m:
                raise InvariantError(f"node at level {level} holds {node.n} entries (order {m})")
            if node.is_leaf:
                if level != 1:
                    raise InvariantError(f"leaf found at level {level}")
                for d in node.ids:
                    if d in seen:
                        raise InvariantError(f"doc {d} stored twice")
                    seen.add(d)
                    if self._leaf_of.get(d) is not node:
                        raise InvariantError(f"doc index wrong for {d}")
                if not classic:
                    return None, node.n
                total = np.zeros(self.dim, dtype=WEIGHT_DTYPE)
                for v in node.vectors:
                    total[v.indices] += v.values
                return total, node.n
            if level <= 1:
                raise InvariantError("internal node at leaf level")
            total = np.zeros(self.dim, dtype=WEIGHT_DTYPE) if classic else None
            count = 0
            for j, child in enumerate(node.children):
                if child.parent is not node:
                    raise InvariantError("broken parent pointer")
                sub, cnt = visit(child, level - 1)
                if node.counts[j] != cnt:
                    raise InvariantError(f"count {node.counts[j]} != subtree size {cnt}")
                if classic:
                    centre = node.centre(j)
                    err = float(np.max(np.abs(centre - sub / cnt)))
                    if err > atol:
                        raise InvariantError(f"centre deviates from subtree mean by {err:.3g}")
                    row = node.sums[j]
                    if not np.isclose(node.sum_sqnorms[j], row @ row, rtol=1e-9, atol=1e-12):
                        raise InvariantError("stale centre norm")
                    total += sub
                else:
                    d = node.centre_ids[j]
                    if d not in self._leaf_of or self.vector(d) != node.centre_vecs[j]:
                        raise InvariantError(f"exemplar {d} is not a stored document")
                    anc = self._leaf_of[d]
                    while anc is not None and anc is not child:
                        anc = anc.parent
                    if anc is None:
                        raise InvariantError(f"exemplar {d} lies outside its subtree")
                count += cnt
            return total, count

        _, total = visit(self.root, self.depth)
        if total != len(self._leaf_of) or seen != set(self._leaf_of):
            raise InvariantError("doc index out of sync with leaves")

    # -- persistence & display -------------------------------------------

    def to_bytes(self) -> bytes:
        return serialize(self)

    @classmethod
    def from_bytes(cls, data: bytes) -> "KTree":
        return deserialize(data)

    def dump(self, depth_limit: int | None = None, top_terms: int = 5) -> str:
        return dump_tree(self, depth_limit, top_terms)


# --------------------------------------------------------------------------
# binary format

MAGIC = b"KTRE"
VERSION = 1
_HEADER = struct.Struct("<4sHIBIIQIQQ")
_NODE = struct.Struct("<BI")
_LEAF_ENTRY = struct.Struct("<QI")
_U64 = struct.Struct("<Q")


class SerializationError(ValueError):
    pass


def serialize(tree: KTree) -> bytes:
    """Versioned little-endian image of the whole tree.

    Header: magic, version, order, mode, split_k, dim, size, depth, seed,
    split counter.  Nodes follow in preorder; weights are stored as float32.
    """
    cfg = tree.config
    out = [
        _HEADER.pack(
            MAGIC, VERSION, cfg.order, MODES.index(cfg.mode), cfg.split_k,
            tree.dim or 0, tree.size, tree.depth, cfg.seed, tree.n_splits,
        )
    ]
    for node, _ in tree.iter_nodes():
        out.append(_NODE.pack(0 if node.is_leaf else 1, node.n))
        if node.is_leaf:
            for d, v in zip(node.ids, node.vectors):
                out.append(_LEAF_ENTRY.pack(d, v.nnz))
                out.append(v.indices.astype("<u4").tobytes())
                out.append(v.values.astype("<f4").tobytes())
        elif node.medoid:
            for c, d in zip(node.counts, node.centre_ids):
                out.append(_U64.pack(c) + _U64.pack(d))
        else:
            for c, row in zip(node.counts, node.centres):  # stored as means
                out.append(_U64.pack(c))
                out.append(row.astype("<f4").tobytes())
    return b"".join(out)


class _Reader:
    def __init__(self, data: bytes) -> None:
        self.data = memoryview(data)
        self.pos = 0

    def take(self, n: int) -> memoryview:
        if self.pos + n > len(self.data):
            raise SerializationError("truncated tree stream")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, st: struct.Struct) -> tuple:
        return st.unpack(self.take(st.size))

    def array(self, dtype: str, count: int) -> np.ndarray:
        width = np.dtype(dtype).itemsize
        return np.frombuffer(self.take(width * count), dtype=dtype)


def deserialize(data: bytes) -> KTree:
    r = _Reader(data)
    magic, version, order, mode, split_k, dim, size, depth, seed, n_splits = r.unpack(_HEADER)
    if magic != MAGIC:
        raise SerializationError("not a K-tree stream (bad magic)")
    if version != VERSION:
        raise SerializationError(f"unsupported format version {version}")
    if mode >= len(MODES):
        raise SerializationError(f"unknown mode {mode}")
    try:
        tree = KTree(KTreeConfig(order=order, mode=MODES[mode], split_k=split_k, seed=seed))
    except ValueError as exc:
        raise SerializationError(f"bad header: {exc}") from None
    tree.n_splits = n_splits
    tree.depth = depth
    tree.dim = dim or None
    medoid = MODES[mode] == MEDOID
    pending: list[InternalNode] = []

    def read_node(level: int, parent):
        kind, n = r.unpack(_NODE)
        if kind not in (0, 1) or (kind == 0) != (level == 1):
            raise SerializationError("node kind inconsistent with depth")
        if kind == 0:
            leaf = LeafNode(parent)
            for _ in range(n):
                d, nnz = r.unpack(_LEAF_ENTRY)
                idx = r.array("<u4", nnz).astype(INDEX_DTYPE)
                val = r.array("<f4", nnz).astype(WEIGHT_DTYPE)
                keep = val != 0.0
                leaf.ids.append(int(d))
                leaf.vectors.append(SparseVector(idx[keep], val[keep], dim, check=False))
                tree._leaf_of[int(d)] = leaf
            return leaf
        node = InternalNode(parent)
        counts = []
        if medoid:
            refs = []
            for _ in range(n):
                (c,) = r.unpack(_U64)
                (d,) = r.unpack(_U64)
                counts.append(c)
                refs.append(int(d))
            node.centre_ids = refs
            pending.append(node)
        else:
            rows = []
            for _ in range(n):
                (c,) = r.unpack(_U64)
                counts.append(c)
                rows.append(r.array("<f4", dim).astype(WEIGHT_DTYPE))
            means = np.array(rows, dtype=WEIGHT_DTYPE).reshape(n, dim)
            # float32 mean times a count below 2**29 is exact in float64
            node.sums = means * np.asarray(counts, dtype=WEIGHT_DTYPE)[:, None]
            node.sum_sqnorms = np.einsum("ij,ij->i", node.sums, node.sums)
        node.counts = [int(c) for c in counts]
        node.children = [read_node(level - 1, node) for _ in range(n)]
        return node

    if depth > 0:
        tree.root = read_node(depth, None)
    if r.pos != len(r.data):
        raise SerializationError("trailing bytes after tree")
    if tree.size != size:
        raise SerializationError(f"header size {size} != stored documents {tree.size}")
    for node in pending:
        try:
            node.centre_vecs = [tree.vector(d) for d in node.centre_ids]
        except KeyError:
            raise SerializationError("exemplar references a missing document") from None
    return tree


# --------------------------------------------------------------------------
# text dump


def _top_terms(centre: Vector, n: int) -> str:
    if isinstance(centre, SparseVector):
        idx, val = centre.indices, centre.values
    else:
        idx = np.flatnonzero(centre)
        val = centre[idx]
    if idx.size == 0:
        return ""
    order = np.lexsort((idx, -val))[:n]
    return ",".join(f"{int(idx[i]) + 1}:{val[i]:.4g}" for i in order)


def dump_tree(tree: KTree, depth_limit: int | None = None, top_terms: int = 5) -> str:
    """Indented preorder listing, one line per node after a ``#`` header.

    Each node line carries its preorder id, level, entry count, the number of
    documents beneath it and the top weighted terms (1-based term columns) of
    the centre that points at it.  Leaves also list their doc ids.
    ``depth_limit`` counts levels from the root; ``1`` prints the root only.
    """
    cfg = tree.config
    lines = [
        f"# ktree order={cfg.order} mode={cfg.mode} split_k={cfg.split_k} "
        f"dim={tree.dim or 0} size={tree.size} depth={tree.depth}"
    ]
    if tree.root is None:
        return "\n".join(lines) + "\n"
    counter = 0
    stack = [(tree.root, tree.depth, None, None)]
    while stack:
        node, level, parent, j = stack.pop()
        indent = "  " * (tree.depth - level)
        count = node.n if node.is_leaf else sum(node.counts)
        parts = [f"{indent}node {counter} level={level} entries={node.n} count={count}"]
        counter += 1
        if parent is not None:
            if parent.medoid:
                parts.append(f"exemplar={parent.centre_ids[j]}")
            parts.append(f"top={_top_terms(parent.centre(j), top_terms)}")
        if node.is_leaf:
            parts.append("docs=" + ",".join(map(str, node.ids)))
        lines.append(" ".join(parts))
        if not node.is_leaf and (depth_limit is None or tree.depth - level + 1 < depth_limit):
            stack.extend((c, level - 1, node, i) for i, c in reversed(list(enumerate(node.children))))
    return "\n".join(lines) + "\n"
