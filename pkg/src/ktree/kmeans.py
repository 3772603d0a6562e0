"""Convergent Lloyd k-means and medoid (exemplar) selection.

Points may be sparse documents or dense rows; centroids are always dense.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .vectors import WEIGHT_DTYPE, SparseBlock, SparseVector, Vector, densify


@dataclass
class KMeansResult:
    centroids: np.ndarray  # (k, dim)
    assignment: np.ndarray  # (n,) cluster index per point
    iterations: int
    history: list[float] = field(default_factory=list)
    points: Optional["PointSet"] = field(default=None, repr=False)
    weights: Optional[np.ndarray] = field(default=None, repr=False)
    _objective: Optional[float] = field(default=None, repr=False)

    @property
    def objective(self) -> float:
        """Sum of (weighted) squared distances to the assigned centroids.

        Computed from exact coordinate differences on first access; the
        per-iteration ``history`` uses the faster norm expansion.
        """
        if self._objective is None:
            self._objective = self.points.exact_objective(self.centroids, self.assignment, self.weights)
        return self._objective

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    def members(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == j)


class PointSet:
    """Uniform view over a batch of sparse or dense points."""

    def __init__(self, points: Sequence[Vector] | np.ndarray) -> None:
        if isinstance(points, np.ndarray) and points.ndim == 2:
            self.block = None
            self.dense = np.asarray(points, dtype=WEIGHT_DTYPE)
            self.n, self.dim = self.dense.shape
            self.sqnorms = np.einsum("ij,ij->i", self.dense, self.dense)
        elif len(points) and all(isinstance(p, SparseVector) for p in points):
            self.block = SparseBlock(points)
            self.dense = None
            self.n, self.dim = len(points), points[0].dim
            self.sqnorms = self.block.sqnorms
        else:
            self.block = None
            self.dense = np.vstack([densify(p) for p in points]) if len(points) else np.empty((0, 0))
            self.n, self.dim = self.dense.shape
            self.sqnorms = np.einsum("ij,ij->i", self.dense, self.dense)

    def row(self, i: int) -> np.ndarray:
        if self.dense is not None:
            return self.dense[i].copy()
        out = np.zeros(self.dim, dtype=WEIGHT_DTYPE)
        mask = self.block.row_ids == i
        out[self.block.indices[mask]] = self.block.data[mask]
        return out

    def sqdist(self, centroids: np.ndarray) -> np.ndarray:
        """Squared distances, shape (n, k)."""
        csq = np.einsum("ij,ij->i", centroids, centroids)
        if self.block is not None:
            cross = self.block.dot_dense(centroids)
        else:
            cross = self.dense @ centroids.T
        d = self.sqnorms[:, None] - 2.0 * cross + csq[None, :]
        np.maximum(d, 0.0, out=d)
        return d

    def exact_objective(self, centroids: np.ndarray, assignment: np.ndarray, weights: np.ndarray | None) -> float:
        if self.dense is not None:
            per_point = ((self.dense - centroids[assignment]) ** 2).sum(axis=1)
        else:
            per_point = np.empty(self.n)
            starts = np.searchsorted(self.block.row_ids, np.arange(self.n + 1))
            for i in range(self.n):
                diff = centroids[assignment[i]].copy()
                a, b = starts[i], starts[i + 1]
                diff[self.block.indices[a:b]] -= self.block.data[a:b]
                per_point[i] = diff @ diff
        if weights is not None:
            per_point = per_point * weights
        return float(per_point.sum())

    def means(self, assignment: np.ndarray, k: int, weights: np.ndarray | None) -> np.ndarray:
        w = np.ones(self.n) if weights is None else weights
        totals = np.bincount(assignment, weights=w, minlength=k)
        if self.block is not None:
            cent = np.empty((k, self.dim), dtype=WEIGHT_DTYPE)
            for j in range(k):
                cent[j] = self.block.weighted_sum(
                    assignment == j, None if weights is None else weights
                )
        else:
            onehot = (assignment[None, :] == np.arange(k)[:, None]) * w[None, :]
            cent = onehot @ self.dense
        cent /= totals[:, None]
        return cent


def _repair_empty(assignment: np.ndarray, dist: np.ndarray, k: int) -> None:
    # move the point farthest from its own centroid into each empty cluster
    sizes = np.bincount(assignment, minlength=k)
    for j in np.flatnonzero(sizes == 0):
        own = dist[np.arange(assignment.size), assignment]
        movable = sizes[assignment] > 1
        own = np.where(movable, own, -1.0)
        i = int(np.argmax(own))
        sizes[assignment[i]] -= 1
        assignment[i] = j
        sizes[j] += 1


def _objective(dist: np.ndarray, assignment: np.ndarray, weights: np.ndarray | None) -> float:
    d = dist[np.arange(assignment.size), assignment]
    if weights is not None:
        d = d * weights
    return float(d.sum())


def kmeans(
    points: Sequence[Vector] | np.ndarray,
    k: int,
    seed: int = 0,
    *,
    weights: np.ndarray | None = None,
    init: Sequence[int] | None = None,
    max_iter: int = 1000,
) -> KMeansResult:
    """Run Lloyd iterations until no assignment changes.

    Parameters
    ----------
    points : sequence of SparseVector / dense arrays, or a 2-d array
    k : number of clusters, ``1 <= k <= len(points)``
    seed : seeds the choice of ``k`` distinct initial points
    weights : optional per-point weights; centroids become weighted means
        and the objective a weighted sum
    init : explicit indices of the initial centroid points (overrides ``seed``)
    max_iter : hard stop against floating-point cycling

    Empty clusters are refilled with the point farthest from its centroid.
    Equidistant centroids resolve to the lowest cluster index.
    """
    ps = points if isinstance(points, PointSet) else PointSet(points)
    n = ps.n
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    if weights is not None:
        weights = np.asarray(weights, dtype=WEIGHT_DTYPE)
        if weights.shape != (n,) or np.any(weights <= 0):
            raise ValueError("weights must be positive, one per point")
    if init is None:
        rng = np.random.default_rng(seed)
        init = np.sort(rng.choice(n, size=k, replace=False))
    elif len(set(init)) != k:
        raise ValueError("init must name k distinct points")

    centroids = np.vstack([ps.row(int(i)) for i in init])
    prev: np.ndarray | None = None
    history: list[float] = []
    iterations = 0
    dist = ps.sqdist(centroids)
    while True:
        assignment = np.argmin(dist, axis=1)
        _repair_empty(assignment, dist, k)
        if prev is not None and np.array_equal(assignment, prev):
            break
        if iterations >= max_iter:
            break
        centroids = ps.means(assignment, k, weights)
        iterations += 1
        prev = assignment
        dist = ps.sqdist(centroids)
        history.append(_objective(dist, assignment, weights))

    assignment = prev if prev is not None else assignment
    return KMeansResult(centroids, assignment, iterations, history, ps, weights)


def select_medoids(
    points: Sequence[Vector] | np.ndarray, result: KMeansResult
) -> list[int]:
    """For each cluster, the index of its member nearest to the centroid.

    Ties go to the lower point index.
    """
    ps = points if isinstance(points, PointSet) else PointSet(points)
    dist = ps.sqdist(result.centroids)
    medoids = []
    for j in range(result.k):
        members = np.flatnonzero(result.assignment == j)
        medoids.append(int(members[np.argmin(dist[members, j])]))
    return medoids
