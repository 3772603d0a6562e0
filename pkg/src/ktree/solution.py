from __future__ import annotations

import os
from dataclasses import dataclass
from typing import IO, Iterable, Sequence, Union


@dataclass
class ClusteringSolution:
    """A partition of document ids into clusters.

    ``clusters[j]`` holds the sorted doc ids of cluster ``j``; ``assignment``
    maps every doc id back to its cluster index.
    """

    clusters: list[list[int]]
    assignment: dict[int, int]

    @classmethod
    def from_clusters(cls, clusters: Iterable[Iterable[int]]) -> "ClusteringSolution":
        groups = [sorted(c) for c in clusters]
        groups = [g for g in groups if g]
        assignment: dict[int, int] = {}
        for j, group in enumerate(groups):
            for d in group:
                if d in assignment:
                    raise ValueError(f"doc {d} assigned to more than one cluster")
                assignment[d] = j
        return cls(groups, assignment)

    @classmethod
    def from_assignment(cls, labels: Sequence[int]) -> "ClusteringSolution":
        """Build from a per-document cluster index; indices are compacted."""
        groups: dict[int, list[int]] = {}
        for doc, c in enumerate(labels):
            if c < 0:
                raise ValueError(f"doc {doc} has no cluster")
            groups.setdefault(int(c), []).append(doc)
        return cls.from_clusters(groups[c] for c in sorted(groups))

    @property
    def k(self) -> int:
        return len(self.clusters)

    @property
    def n_docs(self) -> int:
        return len(self.assignment)

    def labels(self) -> list[int]:
        """Cluster index per doc id, for dense doc ids ``0..n-1``."""
        return [self.assignment[d] for d in range(self.n_docs)]

    def sizes(self) -> list[int]:
        return [len(c) for c in self.clusters]


def write_solution(solution: ClusteringSolution, dest: Union[str, os.PathLike, IO[str]]) -> None:
    """One cluster index per line, line ``i`` for doc ``i`` (CLUTO layout)."""
    text = "".join(f"{c}\n" for c in solution.labels())
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        dest.write(text)


def read_solution(source: Union[str, os.PathLike, IO[str]]) -> ClusteringSolution:
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8") as fh:
            lines = fh.read().split()
    else:
        lines = source.read().split()
    try:
        labels = [int(tok) for tok in lines]
    except ValueError as exc:
        raise ValueError(f"bad cluster index in solution file: {exc}") from None
    return ClusteringSolution.from_assignment(labels)
