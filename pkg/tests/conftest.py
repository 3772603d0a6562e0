from __future__ import annotations

import numpy as np
import pytest

from ktree.vectors import SparseVector

_ACCEPTANCE: list[tuple[str, bool, str]] = []


def random_sparse(rng: np.random.Generator, dim: int, nnz: int | None = None) -> SparseVector:
    if nnz is None:
        nnz = int(rng.integers(0, dim + 1))
    idx = np.sort(rng.choice(dim, size=nnz, replace=False))
    val = rng.normal(size=nnz)
    val[val == 0.0] = 1.0
    return SparseVector(idx, val, dim)


def clustered_sparse(
    rng: np.random.Generator, n: int, dim: int = 32, n_groups: int = 6, support: int = 8
) -> list[SparseVector]:
    """Sparse vectors drawn around a few centres, each with its own support."""
    supports = [np.sort(rng.choice(dim, size=support, replace=False)) for _ in range(n_groups)]
    centres = [rng.normal(scale=5.0, size=support) for _ in range(n_groups)]
    out = []
    for g in rng.integers(0, n_groups, size=n):
        vals = centres[g] + rng.normal(size=support)
        vals[vals == 0.0] = 1e-3
        out.append(SparseVector(supports[g], vals, dim))
    return out


def dense_list(v: SparseVector) -> list[float]:
    """Independent densify: plain Python, no numpy scatter."""
    out = [0.0] * v.dim
    for t, w in zip(v.indices.tolist(), v.values.tolist()):
        out[t] = w
    return out


def brute_sqdist(a, b) -> float:
    da = dense_list(a) if isinstance(a, SparseVector) else list(map(float, a))
    db = dense_list(b) if isinstance(b, SparseVector) else list(map(float, b))
    return sum((x - y) ** 2 for x, y in zip(da, db))


def subtree_vectors(node) -> list[SparseVector]:
    if node.is_leaf:
        return list(node.vectors)
    out = []
    for child in node.children:
        out.extend(subtree_vectors(child))
    return out


def brute_check_tree(tree, atol: float = 1e-6) -> None:
    """Independent invariant oracle: recompute every entry from its leaves."""
    if tree.root is None:
        assert tree.size == 0
        return
    m = tree.config.order
    stored = {}
    leaf_levels = set()

    def walk(node, level):
        assert 1 <= node.n <= m
        if node.is_leaf:
            leaf_levels.add(level)
            for d, v in zip(node.ids, node.vectors):
                assert d not in stored
                stored[d] = v
            return
        for j, child in enumerate(node.children):
            vecs = subtree_vectors(child)
            assert node.counts[j] == len(vecs)
            if tree.mode == "classic":
                mean = np.mean([v.to_dense() for v in vecs], axis=0)
                assert np.max(np.abs(node.centres[j] - mean)) <= atol
            else:
                assert any(node.centre_vecs[j] == v for v in vecs)
            walk(child, level - 1)

    walk(tree.root, tree.depth)
    assert leaf_levels == {1}
    assert len(stored) == tree.size
    if tree.mode == "medoid":
        for node, _ in tree.iter_nodes():
            if not node.is_leaf:
                for d, v in zip(node.centre_ids, node.centre_vecs):
                    assert stored[d] == v


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def large_topic_corpus():
    """50,000 TF-IDF weighted documents over 8,000 terms, shared by the timing tests."""
    from ktree.corpus import tfidf_weight
    from ktree.synthetic import topic_corpus

    corpus, labels = topic_corpus(50_000, n_terms=8000, seed=11)
    return tfidf_weight(corpus), labels


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
