"""Corpus ingestion, TF-IDF weighting and rank-based term culling.

Matrix files follow the CLUTO sparse layout::

    n_rows n_cols nnz
    t w t w ...        <- one line per document, 1-based term ids

Label files hold one class token per line, line ``i`` labelling document ``i``.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass, field
from typing import IO, Iterator, Sequence, Union

import numpy as np

from .vectors import INDEX_DTYPE, WEIGHT_DTYPE, SparseVector

Source = Union[str, os.PathLike, IO[str], IO[bytes]]


class FormatError(ValueError):
    """A matrix, label or solution file could not be parsed."""


@dataclass
class Corpus:
    """Documents indexed densely by position; ``docs[i]`` is document ``i``."""

    docs: list[SparseVector]
    vocab_size: int

    @property
    def n_docs(self) -> int:
        return len(self.docs)

    @property
    def nnz(self) -> int:
        return sum(v.nnz for v in self.docs)

    def __len__(self) -> int:
        return len(self.docs)

    def __iter__(self) -> Iterator[tuple[int, SparseVector]]:
        return iter(enumerate(self.docs))

    def subset(self, doc_ids: Sequence[int]) -> "Corpus":
        return Corpus([self.docs[i] for i in doc_ids], self.vocab_size)


@dataclass
class LabelSet:
    labels: list[int]
    names: list[str] = field(default_factory=list)

    @property
    def n_classes(self) -> int:
        return len(self.names) if self.names else (max(self.labels) + 1 if self.labels else 0)

    def __len__(self) -> int:
        return len(self.labels)

    def __getitem__(self, doc_id: int) -> int:
        return self.labels[doc_id]


def _open_text(source: Source) -> tuple[IO[str], bool]:
    if isinstance(source, (str, os.PathLike)):
        return open(source, "r", encoding="utf-8"), True
    if isinstance(source, io.TextIOBase):
        return source, False
    # binary stream
    return io.TextIOWrapper(source, encoding="utf-8"), False


def read_matrix(source: Source) -> Corpus:
    """Parse a CLUTO-style sparse matrix into a :class:`Corpus`."""
    fh, owned = _open_text(source)
    try:
        lines = fh.read().splitlines()
    finally:
        if owned:
            fh.close()

    if not lines:
        raise FormatError("line 1: missing header")
    header = lines[0].split()
    if len(header) != 3:
        raise FormatError(f"line 1: expected 'n_rows n_cols nnz', got {lines[0]!r}")
    try:
        n_rows, n_cols, nnz = (int(tok) for tok in header)
    except ValueError:
        raise FormatError(f"line 1: non-integer header {lines[0]!r}") from None
    if n_rows < 0 or n_cols < 0 or nnz < 0:
        raise FormatError("line 1: negative header value")

    body = lines[1:]
    while len(body) > n_rows and not body[-1].strip():
        body.pop()
    if len(body) != n_rows:
        raise FormatError(f"expected {n_rows} document rows, found {len(body)}")
    dim = max(n_cols, 1)

    docs: list[SparseVector] = []
    seen = 0
    for row, text in enumerate(body):
        lineno = row + 2
        toks = text.split()
        if len(toks) % 2:
            raise FormatError(f"line {lineno}: odd number of tokens")
        try:
            idx = np.array(toks[0::2], dtype=INDEX_DTYPE)
            val = np.array(toks[1::2], dtype=WEIGHT_DTYPE)
        except ValueError:
            raise FormatError(f"line {lineno}: malformed term/weight pair") from None
        seen += idx.size
        if idx.size and (idx.min() < 1 or idx.max() > n_cols):
            raise FormatError(f"line {lineno}: term index out of range [1, {n_cols}]")
        idx -= 1
        order = np.argsort(idx, kind="stable")
        idx, val = idx[order], val[order]
        if idx.size > 1 and np.any(idx[1:] == idx[:-1]):
            raise FormatError(f"line {lineno}: duplicate term index")
        keep = val != 0.0
        docs.append(SparseVector(idx[keep], val[keep], dim, check=False))
    if seen != nnz:
        raise FormatError(f"header declares {nnz} non-zeros, found {seen}")
    return Corpus(docs, n_cols)


def write_matrix(corpus: Corpus, dest: Source) -> None:
    """Write ``corpus`` in CLUTO sparse format, weights to 6 significant digits."""
    out = [f"{corpus.n_docs} {corpus.vocab_size} {corpus.nnz}\n"]
    for v in corpus.docs:
        out.append(
            " ".join(f"{t + 1} {w:.6g}" for t, w in zip(v.indices.tolist(), v.values.tolist()))
            + "\n"
        )
    text = "".join(out)
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        dest.write(text)


def read_labels(source: Source, n_docs: int | None = None) -> LabelSet:
    """Map class tokens to dense ids in order of first appearance."""
    fh, owned = _open_text(source)
    try:
        lines = fh.read().splitlines()
    finally:
        if owned:
            fh.close()
    while lines and not lines[-1].strip():
        lines.pop()
    if n_docs is not None and len(lines) != n_docs:
        raise FormatError(f"label file has {len(lines)} lines, corpus has {n_docs} documents")
    ids: dict[str, int] = {}
    labels = []
    for lineno, line in enumerate(lines, 1):
        token = line.strip()
        if not token:
            raise FormatError(f"line {lineno}: empty label")
        labels.append(ids.setdefault(token, len(ids)))
    return LabelSet(labels, list(ids))


def write_labels(labels: LabelSet, dest: Source) -> None:
    names = labels.names or [str(i) for i in range(labels.n_classes)]
    text = "".join(f"{names[c]}\n" for c in labels.labels)
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        dest.write(text)


def _flatten(corpus: Corpus) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    lengths = np.array([v.nnz for v in corpus.docs], dtype=np.intp)
    if lengths.sum() == 0:
        return np.empty(0, INDEX_DTYPE), np.empty(0, WEIGHT_DTYPE), lengths
    idx = np.concatenate([v.indices for v in corpus.docs])
    val = np.concatenate([v.values for v in corpus.docs])
    return idx, val, lengths


def _unflatten(idx: np.ndarray, val: np.ndarray, lengths: np.ndarray, dim: int) -> list[SparseVector]:
    bounds = np.concatenate([[0], np.cumsum(lengths)])
    return [
        SparseVector(idx[a:b], val[a:b], dim, check=False)
        for a, b in zip(bounds[:-1].tolist(), bounds[1:].tolist())
    ]


def tfidf_weight(corpus: Corpus) -> Corpus:
    """Reweight raw term frequencies by ``tf * ln(N / df)``.

    Terms present in every document get weight zero and are dropped.
    """
    n = corpus.n_docs
    if n == 0:
        return Corpus([], corpus.vocab_size)
    idx, val, lengths = _flatten(corpus)
    df = np.bincount(idx, minlength=corpus.vocab_size)
    weights = val * np.log(n / df[idx])
    keep = weights != 0.0
    rows = np.repeat(np.arange(n), lengths)[keep]
    new_lengths = np.bincount(rows, minlength=n)
    dim = corpus.docs[0].dim
    return Corpus(_unflatten(idx[keep], weights[keep], new_lengths, dim), corpus.vocab_size)


def term_ranks(corpus: Corpus) -> np.ndarray:
    """Summed weight of every term across the corpus."""
    idx, val, _ = _flatten(corpus)
    return np.bincount(idx, weights=val, minlength=corpus.vocab_size)


def cull_terms(corpus: Corpus, keep: int) -> tuple[Corpus, dict[int, int]]:
    """Keep the ``keep`` highest-ranked terms and re-index them densely.

    Rank ties go to the lower term id.  Surviving terms keep their relative
    order.  Returns the culled corpus and an ``old_id -> new_id`` map.
    """
    if keep < 1:
        raise ValueError("keep must be at least 1")
    vocab = corpus.vocab_size
    ranks = term_ranks(corpus)
    if keep >= vocab:
        survivors = np.arange(vocab)
    else:
        order = np.lexsort((np.arange(vocab), -ranks))
        survivors = np.sort(order[:keep])
    remap = np.full(max(vocab, 1), -1, dtype=INDEX_DTYPE)
    remap[survivors] = np.arange(survivors.size)
    new_dim = max(int(survivors.size), 1)

    docs = []
    for v in corpus.docs:
        new_idx = remap[v.indices]
        mask = new_idx >= 0
        docs.append(SparseVector(new_idx[mask], v.values[mask], new_dim, check=False))
    term_map = {int(old): int(new) for new, old in enumerate(survivors.tolist())}
    return Corpus(docs, int(survivors.size)), term_map


def write_term_map(term_map: dict[int, int], dest: Source) -> None:
    """One line per surviving term: its original 1-based column, in new order."""
    ordered = sorted(term_map.items(), key=lambda kv: kv[1])
    text = "".join(f"{old + 1}\n" for old, _ in ordered)
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        dest.write(text)
