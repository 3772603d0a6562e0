import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ktree.vectors import (
    SparseBlock,
    SparseVector,
    StorageModel,
    accumulate,
    dense_rows_sqdist,
    densify,
    estimate_storage,
    format_size,
    sparsify,
    squared_euclidean,
)

from conftest import brute_sqdist, dense_list, random_sparse


@st.composite
def sparse_vectors(draw, dim=None):
    dim = dim or draw(st.integers(1, 20))
    idx = sorted(draw(st.sets(st.integers(0, dim - 1), max_size=dim)))
    # squares of subnormal weights underflow to zero
    vals = [draw(st.floats(-50, 50).filter(lambda x: abs(x) > 1e-100)) for _ in idx]
    return SparseVector(idx, vals, dim)


@st.composite
def sparse_pairs(draw):
    dim = draw(st.integers(1, 20))
    return draw(sparse_vectors(dim)), draw(sparse_vectors(dim))


class TestSparseVector:
    def test_rejects_unsorted(self):
        with pytest.raises(ValueError):
            SparseVector([2, 1], [1.0, 1.0], 3)

    def test_rejects_duplicate_and_range(self):
        with pytest.raises(ValueError):
            SparseVector([1, 1], [1.0, 2.0], 3)
        with pytest.raises(ValueError):
            SparseVector([3], [1.0], 3)
        with pytest.raises(ValueError):
            SparseVector([0], [0.0], 3)

    def test_immutable(self):
        v = SparseVector([0, 2], [1.0, 2.0], 3)
        with pytest.raises(ValueError):
            v.values[0] = 5.0

    def test_from_pairs_sorts_and_drops_zeros(self):
        v = SparseVector.from_pairs([(2, 2.0), (0, 1.0), (1, 0.0)], 3)
        assert v.pairs() == [(0, 1.0), (2, 2.0)]


class TestSquaredEuclidean:
    def test_identity(self, rng):
        for _ in range(20):
            v = random_sparse(rng, 30)
            assert squared_euclidean(v, v) == 0.0
            assert squared_euclidean(v, densify(v)) == 0.0

    def test_unit_axes(self):
        a = SparseVector([0], [1.0], 2)
        b = SparseVector([1], [1.0], 2)
        assert squared_euclidean(a, b) == 2.0
        assert squared_euclidean(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 2.0

    def test_matches_densified_oracle(self, rng):
        for _ in range(50):
            a, b = random_sparse(rng, 40), random_sparse(rng, 40)
            expected = brute_sqdist(a, b)
            assert squared_euclidean(a, b) == pytest.approx(expected, abs=1e-9)
            assert squared_euclidean(a, densify(b)) == pytest.approx(expected, abs=1e-9)
            assert squared_euclidean(densify(a), b) == pytest.approx(expected, abs=1e-9)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            squared_euclidean(SparseVector([0], [1.0], 2), SparseVector([0], [1.0], 3))
        with pytest.raises(ValueError):
            squared_euclidean(SparseVector([0], [1.0], 2), np.zeros(3))

    @given(sparse_pairs())
    def test_symmetric_non_negative(self, pair):
        a, b = pair
        d = squared_euclidean(a, b)
        assert d >= 0.0
        assert d == squared_euclidean(b, a)
        assert (d == 0.0) == (a == b)


class TestAccumulate:
    def test_identity_and_inverse(self, rng):
        v = random_sparse(rng, 25, 10)
        acc = accumulate(np.zeros(25), v, 1.0)
        assert np.array_equal(acc, densify(v))
        assert np.array_equal(accumulate(densify(v), v, -1.0), np.zeros(25))

    def test_running_mean(self, rng):
        vs = [random_sparse(rng, 30) for _ in range(17)]
        acc = np.zeros(30)
        for v in vs:
            accumulate(acc, v, 1.0 / len(vs))
        dense = [dense_list(v) for v in vs]
        direct = [sum(col) / len(vs) for col in zip(*dense)]
        assert np.allclose(acc, direct, atol=1e-9, rtol=0)

    def test_mismatch(self):
        with pytest.raises(ValueError):
            accumulate(np.zeros(3), SparseVector([0], [1.0], 4))


class TestSparsify:
    def test_zero_vector(self):
        assert sparsify(np.zeros(5)).nnz == 0

    @given(sparse_vectors())
    def test_round_trip(self, v):
        assert sparsify(densify(v), 0.0) == v

    def test_dense_round_trip_with_epsilon(self, rng):
        for _ in range(20):
            d = rng.normal(size=50)
            d[rng.random(50) < 0.5] = 0.0
            assert np.array_equal(densify(sparsify(d, 1e-12)), d)

    def test_threshold_is_strict(self):
        s = sparsify(np.array([0.5, -0.2, 0.1, 0.0]), 0.1)
        assert s.pairs() == [(0, 0.5), (1, -0.2)]


class TestStorage:
    def test_reference_collection(self):
        dense, sparse = estimate_storage(114366, 8000, 10229913)
        assert dense == 3_659_712_000
        assert sparse == 61_379_478
        assert format_size(sparse) == "58.54 MB"
        assert format_size(dense, 1) == "3.4 GB"

    def test_trivial(self):
        assert estimate_storage(0, 8000, 0) == (0, 0)
        assert estimate_storage(10, 10, 100) == (400, 600)

    def test_exact_integers(self):
        dense, sparse = estimate_storage(10**6, 10**6, 10**12)
        assert isinstance(dense, int) and dense == 4 * 10**12
        assert sparse == 6 * 10**12

    def test_overflow(self):
        with pytest.raises(OverflowError):
            estimate_storage(2**40, 2**40, 0)

    def test_custom_model(self):
        assert estimate_storage(2, 3, 4, StorageModel(4, 8)) == (48, 48)
        with pytest.raises(ValueError):
            StorageModel(0, 4)


class TestBatchKernels:
    def test_dense_rows_match_pairwise(self, rng):
        rows = rng.normal(size=(7, 60))
        norms = np.einsum("ij,ij->i", rows, rows)
        for _ in range(10):
            q = random_sparse(rng, 60)
            got = dense_rows_sqdist(rows, norms, q)
            want = [squared_euclidean(q, r) for r in rows]
            assert np.allclose(got, want, atol=1e-9)

    def test_sparse_block_matches_pairwise(self, rng):
        vecs = [random_sparse(rng, 40) for _ in range(9)] + [SparseVector.empty(40)]
        block = SparseBlock(vecs)
        for _ in range(10):
            q = random_sparse(rng, 40)
            want = [squared_euclidean(q, v) for v in vecs]
            assert np.allclose(block.sqdist(q), want, atol=1e-9)
            assert np.allclose(block.sqdist(densify(q)), want, atol=1e-9)

    def test_sparse_block_empty_query(self, rng):
        vecs = [random_sparse(rng, 10, 4) for _ in range(3)]
        assert np.allclose(SparseBlock(vecs).sqdist(SparseVector.empty(10)), [v.sqnorm for v in vecs])
