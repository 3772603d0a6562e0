"""K-tree document clustering."""

from .corpus import Corpus, FormatError, LabelSet, cull_terms, read_labels, read_matrix, tfidf_weight, write_matrix
from .kmeans import KMeansResult, kmeans, select_medoids
from .solution import ClusteringSolution
from .tree import CLASSIC, MEDOID, KTree, KTreeConfig, TreeStats, deserialize, serialize
from .vectors import SparseVector, StorageModel, densify, estimate_storage, sparsify, squared_euclidean

__version__ = "0.1.0"

__all__ = [
    "CLASSIC",
    "MEDOID",
    "ClusteringSolution",
    "Corpus",
    "FormatError",
    "KMeansResult",
    "KTree",
    "KTreeConfig",
    "LabelSet",
    "SparseVector",
    "StorageModel",
    "TreeStats",
    "cull_terms",
    "densify",
    "deserialize",
    "estimate_storage",
    "kmeans",
    "read_labels",
    "read_matrix",
    "select_medoids",
    "serialize",
    "sparsify",
    "squared_euclidean",
    "tfidf_weight",
    "write_matrix",
]
