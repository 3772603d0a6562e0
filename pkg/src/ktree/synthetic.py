"""Synthetic labelled corpora for tests and benchmarks."""

from __future__ import annotations

import numpy as np

from .corpus import Corpus, LabelSet
from .vectors import INDEX_DTYPE, WEIGHT_DTYPE, SparseVector


def _zipf_probs(n: int, s: float = 1.0) -> np.ndarray:
    p = 1.0 / np.arange(1, n + 1) ** s
    return p / p.sum()


def topic_corpus(
    n_docs: int,
    n_terms: int = 2000,
    n_classes: int = 4,
    doc_length: int = 60,
    topic_weight: float = 0.7,
    seed: int = 0,
) -> tuple[Corpus, LabelSet]:
    """Bag-of-words mixture: each class owns a block of topical terms.

    Every token is drawn from the document's class block with probability
    ``topic_weight`` and from the whole vocabulary otherwise; both draws are
    Zipfian.  Weights are raw term frequencies.
    """
    if not 0.0 <= topic_weight <= 1.0:
        raise ValueError("topic_weight must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    block = n_terms // n_classes
    if block < 1:
        raise ValueError("need at least one term per class")
    classes = rng.integers(0, n_classes, size=n_docs)
    lengths = np.maximum(1, rng.poisson(doc_length, size=n_docs))
    doc_of_token = np.repeat(np.arange(n_docs), lengths)
    n_tokens = doc_of_token.size

    # each class shuffles its own block so the Zipf heads differ
    perms = np.stack([rng.permutation(block) for _ in range(n_classes)])
    topical = rng.random(n_tokens) < topic_weight
    rank = rng.choice(block, size=n_tokens, p=_zipf_probs(block))
    cls = classes[doc_of_token]
    topic_terms = cls * block + perms[cls, rank]
    background_order = rng.permutation(n_terms)
    background = background_order[rng.choice(n_terms, size=n_tokens, p=_zipf_probs(n_terms, 0.8))]
    terms = np.where(topical, topic_terms, background).astype(INDEX_DTYPE)

    key = doc_of_token.astype(np.int64) * n_terms + terms
    uniq, tf = np.unique(key, return_counts=True)
    docs_u = uniq // n_terms
    terms_u = (uniq % n_terms).astype(INDEX_DTYPE)
    bounds = np.searchsorted(docs_u, np.arange(n_docs + 1))
    docs = [
        SparseVector(terms_u[a:b], tf[a:b].astype(WEIGHT_DTYPE), n_terms, check=False)
        for a, b in zip(bounds[:-1].tolist(), bounds[1:].tolist())
    ]
    labels = LabelSet([int(c) for c in classes], [f"c{i}" for i in range(n_classes)])
    return Corpus(docs, n_terms), labels


def gaussian_corpus(
    n_docs: int,
    dim: int = 8,
    n_classes: int = 4,
    spread: float = 1.0,
    separation: float = 10.0,
    seed: int = 0,
) -> tuple[Corpus, LabelSet]:
    """Dense Gaussian blobs stored as (fully populated) sparse vectors."""
    rng = np.random.default_rng(seed)
    means = rng.normal(scale=separation, size=(n_classes, dim))
    classes = rng.integers(0, n_classes, size=n_docs)
    x = means[classes] + rng.normal(scale=spread, size=(n_docs, dim))
    x[x == 0.0] = 1e-12
    idx = np.arange(dim, dtype=INDEX_DTYPE)
    docs = [SparseVector(idx, row, dim, check=False) for row in x]
    labels = LabelSet([int(c) for c in classes], [f"g{i}" for i in range(n_classes)])
    return Corpus(docs, dim), labels
