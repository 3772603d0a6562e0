"""End-to-end clustering runs: plain K-tree, medoid K-tree, and sampled runs.

A sampled run picks exemplar documents with a medoid K-tree, builds a
classic K-tree over the exemplars only, then assigns every other document to
the leaf its nearest-neighbour search ends in.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .corpus import Corpus, LabelSet
from .evaluation import evaluate
from .solution import ClusteringSolution
from .tree import CLASSIC, MEDOID, KTree, KTreeConfig, TreeStats


@dataclass
class RunReport:
    solution: ClusteringSolution
    wall_time_seconds: float
    tree_stats: TreeStats
    config: KTreeConfig
    fraction: Optional[float] = None
    sample_size: Optional[int] = None
    sampling_order: Optional[int] = None
    tree: Optional[KTree] = field(default=None, repr=False)

    @property
    def k(self) -> int:
        return self.solution.k

    @property
    def achieved_fraction(self) -> Optional[float]:
        if self.sample_size is None:
            return None
        return self.sample_size / self.solution.n_docs

    def record(self, labels: LabelSet | None = None, timing: bool = True) -> dict:
        """Flat dict of the run's headline numbers (metrics rounded to 4 dp)."""
        purity = entropy = None
        if labels is not None:
            p, e = evaluate(self.solution, labels)
            purity, entropy = round(p, 4), round(e, 4)
        achieved = self.achieved_fraction
        return {
            "k": self.k,
            "purity": purity,
            "entropy": entropy,
            "seconds": round(self.wall_time_seconds, 6) if timing else None,
            "order": self.config.order,
            "mode": self.config.mode,
            "split_k": self.config.split_k,
            "seed": self.config.seed,
            "fraction": self.fraction,
            "achieved_fraction": None if achieved is None else round(achieved, 4),
        }

    def to_json(self, labels: LabelSet | None = None, timing: bool = True) -> str:
        return json.dumps(self.record(labels, timing), separators=(",", ":"))


def _insertion_order(n: int, shuffle: bool, seed: int) -> list[int]:
    if not shuffle:
        return list(range(n))
    return np.random.default_rng(seed).permutation(n).tolist()


def build_tree(corpus: Corpus, config: KTreeConfig, doc_ids=None, shuffle: bool = False) -> KTree:
    ids = list(range(corpus.n_docs)) if doc_ids is None else list(doc_ids)
    if shuffle:
        ids = [ids[i] for i in _insertion_order(len(ids), True, config.seed)]
    tree = KTree(config)
    docs = corpus.docs
    for d in ids:
        tree.insert(d, docs[d])
    return tree


def run_ktree(corpus: Corpus, config: KTreeConfig, shuffle: bool = False) -> RunReport:
    """Insert every document and report the leaf-level clustering."""
    if corpus.n_docs == 0:
        raise ValueError("cannot cluster an empty corpus")
    start = time.perf_counter()
    tree = build_tree(corpus, config, shuffle=shuffle)
    solution = tree.clusters_at_level(1)
    elapsed = time.perf_counter() - start
    return RunReport(solution, elapsed, tree.stats(), config, tree=tree)


PILOT_DOCS = 2000


def sampling_order(fraction: float) -> int:
    """Tree order whose above-leaf level holds about ``fraction * n`` exemplars."""
    return max(2, math.ceil(1.0 / fraction))


def _exemplars(tree: KTree) -> list[int]:
    if tree.depth < 2:
        return tree.doc_ids()
    ids = set()
    for node in tree.nodes_at_level(2):
        ids.update(node.centre_ids)
    return sorted(ids)


def _medoid_sample(
    corpus: Corpus, fraction: float, config: KTreeConfig, calibrate: bool = True
) -> tuple[list[int], int]:
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    n = corpus.n_docs
    if fraction == 1.0 or n == 0:
        return list(range(n)), 1

    def build(order: int, ids=None) -> list[int]:
        cfg = replace(config, order=order, mode=MEDOID, split_k=min(config.split_k, order))
        return _exemplars(build_tree(corpus, cfg, doc_ids=ids))

    def rescaled(order: int, n_seen: int, n_exemplars: int) -> int:
        # leaves fill to a data-dependent fraction of the order
        fill = (n_seen / n_exemplars) / order
        return max(2, math.ceil(1.0 / (fraction * fill)))

    order = sampling_order(fraction)
    if calibrate and n > PILOT_DOCS:
        # estimate the leaf fill on a prefix so the full corpus is built once
        pilot = build(order, range(PILOT_DOCS))
        if len(pilot) < PILOT_DOCS:
            order = rescaled(order, PILOT_DOCS, len(pilot))
    sample = build(order)
    achieved = len(sample) / n
    if calibrate and not fraction / 1.5 <= achieved <= fraction * 1.5 and len(sample) < n:
        retry = rescaled(order, n, len(sample))
        if retry != order:
            order = retry
            sample = build(order)
    return sample, order


def sample_by_medoid(
    corpus: Corpus, fraction: float, config: KTreeConfig, calibrate: bool = True
) -> list[int]:
    """Exemplar doc ids from the above-leaf level of a medoid K-tree.

    The tree order is chosen from ``fraction``.  With ``calibrate`` set, a
    pilot build over the first ``PILOT_DOCS`` documents measures how full the
    leaves get and the order is rescaled accordingly; if the full build still
    lands more than a factor 1.5 away from the target it is rebuilt once.
    The count is never trimmed to hit the target exactly.
    """
    return _medoid_sample(corpus, fraction, config, calibrate)[0]


def run_sampled(
    corpus: Corpus, fraction: float, config: KTreeConfig, calibrate: bool = True
) -> RunReport:
    """Cluster a medoid-selected sample, then place the rest by tree search."""
    if corpus.n_docs == 0:
        raise ValueError("cannot cluster an empty corpus")
    start = time.perf_counter()
    sample, order = _medoid_sample(corpus, fraction, config, calibrate)
    classic = replace(config, mode=CLASSIC)
    tree = build_tree(corpus, classic, doc_ids=sample)
    leaves = tree.leaves()
    slot = {id(leaf): j for j, leaf in enumerate(leaves)}
    clusters = [list(leaf.ids) for leaf in leaves]
    in_sample = np.zeros(corpus.n_docs, dtype=bool)
    in_sample[sample] = True
    for d in np.flatnonzero(~in_sample).tolist():
        clusters[slot[id(tree.find_leaf(corpus.docs[d]))]].append(d)
    solution = ClusteringSolution.from_clusters(clusters)
    elapsed = time.perf_counter() - start
    return RunReport(
        solution,
        elapsed,
        tree.stats(),
        classic,
        fraction=fraction,
        sample_size=len(sample),
        sampling_order=order,
        tree=tree,
    )
