"""Micro-averaged purity and entropy against gold labels."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import LabelSet
from .solution import ClusteringSolution


@dataclass
class ContingencyTable:
    counts: np.ndarray  # (k clusters, q classes)

    @property
    def cluster_sizes(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @property
    def n_classes(self) -> int:
        return self.counts.shape[1]


def contingency(solution: ClusteringSolution, labels: LabelSet) -> ContingencyTable:
    """Cluster-by-class document counts."""
    q = labels.n_classes
    counts = np.zeros((solution.k, max(q, 1)), dtype=np.int64)
    n_labels = len(labels)
    for j, docs in enumerate(solution.clusters):
        for d in docs:
            if not 0 <= d < n_labels:
                raise KeyError(f"doc {d} has no label")
            counts[j, labels.labels[d]] += 1
    return ContingencyTable(counts)


def micro_purity(table: ContingencyTable) -> float:
    if table.n == 0:
        raise ValueError("purity of an empty contingency table")
    return float(table.counts.max(axis=1).sum() / table.n)


def micro_entropy(table: ContingencyTable) -> float:
    """Size-weighted mean of per-cluster class entropy, normalised by log2(q).

    Zero is best.  With a single class every cluster scores zero.
    """
    n = table.n
    if n == 0:
        raise ValueError("entropy of an empty contingency table")
    q = table.n_classes
    if q <= 1:
        return 0.0
    sizes = table.cluster_sizes.astype(float)
    keep = sizes > 0
    p = table.counts[keep] / sizes[keep, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(p > 0, p * np.log2(p), 0.0)
    per_cluster = -plogp.sum(axis=1) / np.log2(q)
    return float((sizes[keep] / n) @ per_cluster)


def evaluate(solution: ClusteringSolution, labels: LabelSet) -> tuple[float, float]:
    """``(purity, entropy)`` for ``solution``."""
    table = contingency(solution, labels)
    return micro_purity(table), micro_entropy(table)
