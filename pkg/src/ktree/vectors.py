"""Sparse and dense vector kernels.

Documents are :class:`SparseVector` instances (sorted term ids plus weights).
Dense vectors are plain one-dimensional float64 numpy arrays.  All distances
are squared Euclidean.

The batch kernels at the bottom of the module (:func:`dense_rows_sqdist`,
:class:`SparseBlock`) are what the tree and k-means use on hot paths.  None of
them ever expands a sparse operand into a dense array.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

INDEX_DTYPE = np.int64
WEIGHT_DTYPE = np.float64

_INT64_MAX = 2**63 - 1


class SparseVector:
    """Immutable sparse vector of ``(term_id, weight)`` pairs.

    ``indices`` is strictly ascending and every index is below ``dim``; no
    stored weight is zero.
    """

    __slots__ = ("indices", "values", "dim", "_sqnorm")

    def __init__(self, indices, values, dim: int, *, check: bool = True) -> None:
        idx = np.asarray(indices, dtype=INDEX_DTYPE)
        val = np.asarray(values, dtype=WEIGHT_DTYPE)
        if check:
            dim = int(dim)
            if dim < 1:
                raise ValueError(f"dim must be positive, got {dim}")
            if idx.ndim != 1 or val.ndim != 1 or idx.shape != val.shape:
                raise ValueError("indices and values must be 1-d arrays of equal length")
            if idx.size:
                if idx[0] < 0 or idx[-1] >= dim:
                    raise ValueError(f"term ids must lie in [0, {dim})")
                if idx.size > 1 and np.any(np.diff(idx) <= 0):
                    raise ValueError("term ids must be strictly ascending")
                if np.any(val == 0.0):
                    raise ValueError("stored weights must be non-zero")
            # private copies keep the vector immutable from the outside
            idx = idx.copy()
            val = val.copy()
        idx.flags.writeable = False
        val.flags.writeable = False
        self.indices = idx
        self.values = val
        self.dim = dim
        self._sqnorm: float | None = None

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, float]], dim: int) -> "SparseVector":
        """Build from unordered pairs; zero weights are dropped."""
        items = sorted((int(t), float(w)) for t, w in pairs if w != 0.0)
        for (a, _), (b, _) in zip(items, items[1:]):
            if a == b:
                raise ValueError(f"duplicate term id {a}")
        if not items:
            return cls(np.empty(0, INDEX_DTYPE), np.empty(0, WEIGHT_DTYPE), dim)
        idx, val = zip(*items)
        return cls(idx, val, dim)

    @classmethod
    def empty(cls, dim: int) -> "SparseVector":
        return cls(np.empty(0, INDEX_DTYPE), np.empty(0, WEIGHT_DTYPE), dim)

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    @property
    def sqnorm(self) -> float:
        if self._sqnorm is None:
            self._sqnorm = float(self.values @ self.values)
        return self._sqnorm

    def to_dense(self) -> np.ndarray:
        return densify(self)

    def pairs(self) -> list[tuple[int, float]]:
        return list(zip(self.indices.tolist(), self.values.tolist()))

    def __len__(self) -> int:
        return self.dim

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SparseVector):
            return NotImplemented
        return (
            self.dim == other.dim
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.values, other.values)
        )

    def __hash__(self) -> int:
        return hash((self.dim, self.indices.tobytes(), self.values.tobytes()))

    def __repr__(self) -> str:
        head = ", ".join(f"{t}:{w:g}" for t, w in self.pairs()[:6])
        more = ", ..." if self.nnz > 6 else ""
        return f"SparseVector(dim={self.dim}, nnz={self.nnz}, {{{head}{more}}})"


Vector = Union[SparseVector, np.ndarray]


@dataclass(frozen=True)
class StorageModel:
    """Byte widths used when sizing a document-term matrix."""

    bytes_per_sparse_index: int = 2
    bytes_per_weight: int = 4

    def __post_init__(self) -> None:
        if self.bytes_per_sparse_index <= 0 or self.bytes_per_weight <= 0:
            raise ValueError("byte widths must be strictly positive")


def dim_of(v: Vector) -> int:
    if isinstance(v, SparseVector):
        return v.dim
    return int(np.shape(v)[0])


def _check_dims(a: Vector, b: Vector) -> None:
    if isinstance(b, np.ndarray) and b.ndim != 1:
        raise ValueError("dense vectors must be one-dimensional")
    if dim_of(a) != dim_of(b):
        raise ValueError(f"dimension mismatch: {dim_of(a)} != {dim_of(b)}")


def densify(v: Vector) -> np.ndarray:
    """Return a fresh dense float64 copy of ``v``."""
    if isinstance(v, SparseVector):
        out = np.zeros(v.dim, dtype=WEIGHT_DTYPE)
        out[v.indices] = v.values
        return out
    return np.array(v, dtype=WEIGHT_DTYPE)


def sparsify(d: Vector, epsilon: float = 0.0) -> SparseVector:
    """Keep exactly the coordinates with ``|d_t| > epsilon``."""
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    if isinstance(d, SparseVector):
        keep = np.abs(d.values) > epsilon
        return SparseVector(d.indices[keep], d.values[keep], d.dim, check=False)
    arr = np.asarray(d, dtype=WEIGHT_DTYPE)
    idx = np.flatnonzero(np.abs(arr) > epsilon)
    return SparseVector(idx.astype(INDEX_DTYPE), arr[idx], arr.shape[0], check=False)


def _sparse_sparse_sqdist(a: SparseVector, b: SparseVector) -> float:
    # exact merge: union of supports, then sum of squared differences
    union = np.union1d(a.indices, b.indices)
    diff = np.zeros(union.size, dtype=WEIGHT_DTYPE)
    diff[np.searchsorted(union, a.indices)] += a.values
    diff[np.searchsorted(union, b.indices)] -= b.values
    return float(diff @ diff)


def _sparse_dense_sqdist(s: SparseVector, d: np.ndarray) -> float:
    diff = d.copy()
    diff[s.indices] -= s.values
    return float(diff @ diff)


def squared_euclidean(a: Vector, b: Vector) -> float:
    """Squared Euclidean distance between any mix of sparse and dense vectors."""
    _check_dims(a, b)
    a_sparse = isinstance(a, SparseVector)
    b_sparse = isinstance(b, SparseVector)
    if a_sparse and b_sparse:
        return _sparse_sparse_sqdist(a, b)
    if a_sparse:
        return _sparse_dense_sqdist(a, np.asarray(b, dtype=WEIGHT_DTYPE))
    if b_sparse:
        return _sparse_dense_sqdist(b, np.asarray(a, dtype=WEIGHT_DTYPE))
    diff = np.asarray(a, dtype=WEIGHT_DTYPE) - np.asarray(b, dtype=WEIGHT_DTYPE)
    return float(diff @ diff)


def accumulate(acc: np.ndarray, v: Vector, scale: float = 1.0) -> np.ndarray:
    """In place ``acc += scale * v``; returns ``acc``."""
    _check_dims(acc, v)
    if isinstance(v, SparseVector):
        acc[v.indices] += scale * v.values
    else:
        acc += scale * np.asarray(v, dtype=WEIGHT_DTYPE)
    return acc


def estimate_storage(
    n_docs: int, n_terms: int, nnz: int, model: StorageModel | None = None
) -> tuple[int, int]:
    """Bytes needed for a dense and a sparsely encoded document-term matrix.

    Returns ``(dense_bytes, sparse_bytes)``.  Arithmetic is exact; results
    that do not fit a signed 64-bit integer raise :class:`OverflowError`.
    """
    model = model or StorageModel()
    for name, value in (("n_docs", n_docs), ("n_terms", n_terms), ("nnz", nnz)):
        if int(value) != value or value < 0:
            raise ValueError(f"{name} must be a non-negative integer")
    dense = int(n_docs) * int(n_terms) * model.bytes_per_weight
    sparse = int(nnz) * (model.bytes_per_sparse_index + model.bytes_per_weight)
    if dense > _INT64_MAX or sparse > _INT64_MAX:
        raise OverflowError("storage estimate exceeds 64-bit range")
    return dense, sparse


_BINARY_UNITS = ("bytes", "KB", "MB", "GB", "TB", "PB")


def format_size(n_bytes: int, decimals: int = 2) -> str:
    """Human readable size in binary units (1 MB = 2**20 bytes)."""
    value = float(n_bytes)
    unit = 0
    while value >= 1024 and unit < len(_BINARY_UNITS) - 1:
        value /= 1024
        unit += 1
    if unit == 0:
        return f"{int(n_bytes)} bytes"
    return f"{value:.{decimals}f} {_BINARY_UNITS[unit]}"


# --------------------------------------------------------------------------
# batch kernels


def dense_rows_sqdist(
    rows: np.ndarray, row_sqnorms: np.ndarray, q: Vector
) -> np.ndarray:
    """Squared distances from ``q`` to each row of a dense matrix.

    A sparse ``q`` is handled by gathering the matrix columns on its support,
    so the query is never expanded to a dense array.
    """
    if isinstance(q, SparseVector):
        cross = rows[:, q.indices] @ q.values
        out = row_sqnorms - 2.0 * cross
        out += q.sqnorm
    else:
        out = row_sqnorms - 2.0 * (rows @ q)
        out += float(q @ q)
    np.maximum(out, 0.0, out=out)
    return out


class SparseBlock:
    """A stack of sparse vectors in CSR layout for batched distances."""

    __slots__ = ("data", "indices", "row_ids", "sqnorms", "n_rows", "dim", "_by_term", "_sorted_terms")

    def __init__(self, vectors: Sequence[SparseVector], dim: int | None = None) -> None:
        n = len(vectors)
        self.n_rows = n
        self.dim = vectors[0].dim if n else int(dim or 0)
        if n:
            self.indices = np.concatenate([v.indices for v in vectors])
            self.data = np.concatenate([v.values for v in vectors])
            lengths = [v.indices.size for v in vectors]
            self.row_ids = np.repeat(np.arange(n), lengths)
        else:
            self.indices = np.empty(0, INDEX_DTYPE)
            self.data = np.empty(0, WEIGHT_DTYPE)
            self.row_ids = np.empty(0, np.intp)
        self.sqnorms = np.array([v.sqnorm for v in vectors], dtype=WEIGHT_DTYPE)
        self._by_term = None
        self._sorted_terms = None

    def dot_sparse(self, q: SparseVector) -> np.ndarray:
        """Row-wise inner products with a sparse vector.

        Entries are grouped by term once (an inverted index over the block);
        each query term then looks up its contiguous run of matching entries.
        """
        if q.nnz == 0 or self.data.size == 0:
            return np.zeros(self.n_rows, dtype=WEIGHT_DTYPE)
        if self._by_term is None:
            self._by_term = np.argsort(self.indices, kind="stable")
            self._sorted_terms = self.indices[self._by_term]
        lo = np.searchsorted(self._sorted_terms, q.indices, side="left")
        counts = np.searchsorted(self._sorted_terms, q.indices, side="right") - lo
        total = int(counts.sum())
        if total == 0:
            return np.zeros(self.n_rows, dtype=WEIGHT_DTYPE)
        run_starts = np.cumsum(counts) - counts
        entries = self._by_term[np.arange(total) + np.repeat(lo - run_starts, counts)]
        prod = self.data[entries] * np.repeat(q.values, counts)
        return np.bincount(self.row_ids[entries], weights=prod, minlength=self.n_rows)

    def dot_dense(self, centres: np.ndarray) -> np.ndarray:
        """Inner products with each row of ``centres``; shape (n_rows, k)."""
        k = centres.shape[0]
        out = np.empty((self.n_rows, k), dtype=WEIGHT_DTYPE)
        for j in range(k):
            prod = centres[j, self.indices] * self.data
            out[:, j] = np.bincount(self.row_ids, weights=prod, minlength=self.n_rows)
        return out

    def sqdist(self, q: Vector) -> np.ndarray:
        """Squared distances from ``q`` to every row."""
        if isinstance(q, SparseVector):
            out = self.sqnorms - 2.0 * self.dot_sparse(q)
            out += q.sqnorm
        else:
            out = self.sqnorms - 2.0 * self.dot_dense(q[None, :])[:, 0]
            out += float(q @ q)
        np.maximum(out, 0.0, out=out)
        return out

    def weighted_sum(self, mask: np.ndarray, weights: np.ndarray | None = None) -> np.ndarray:
        """Dense sum of the rows selected by boolean ``mask``."""
        sel = mask[self.row_ids]
        data = self.data[sel]
        if weights is not None:
            data = data * weights[self.row_ids[sel]]
        return np.bincount(self.indices[sel], weights=data, minlength=self.dim).astype(
            WEIGHT_DTYPE, copy=False
        )
