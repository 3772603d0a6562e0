import io
import math

import numpy as np
import pytest

from ktree.corpus import (
    Corpus,
    FormatError,
    cull_terms,
    read_labels,
    read_matrix,
    tfidf_weight,
    write_labels,
    write_matrix,
    write_term_map,
)
from ktree.vectors import SparseVector


def _random_corpus(rng, n_docs=30, dim=25, raw_counts=True):
    docs = []
    for _ in range(n_docs):
        nnz = int(rng.integers(0, 8))
        idx = np.sort(rng.choice(dim, nnz, replace=False))
        val = rng.integers(1, 6, nnz).astype(float) if raw_counts else rng.random(nnz) + 0.01
        docs.append(SparseVector(idx, val, dim))
    return Corpus(docs, dim)


class TestReadMatrix:
    def test_format_definition(self):
        c = read_matrix(io.StringIO("2 3 3\n1 1.0 3 2.0\n2 5.0\n"))
        assert c.n_docs == 2 and c.vocab_size == 3 and c.nnz == 3
        assert c.docs[0].pairs() == [(0, 1.0), (2, 2.0)]
        assert c.docs[1].pairs() == [(1, 5.0)]

    def test_empty_corpus(self):
        c = read_matrix(io.StringIO("0 0 0\n"))
        assert c.n_docs == 0 and c.nnz == 0

    def test_binary_stream_and_unsorted_row(self):
        c = read_matrix(io.BytesIO(b"1 4 2\n4 1.5 2 2.5\n"))
        assert c.docs[0].pairs() == [(1, 2.5), (3, 1.5)]

    def test_empty_row(self):
        c = read_matrix(io.StringIO("3 2 1\n\n1 1\n\n"))
        assert [d.nnz for d in c.docs] == [0, 1, 0]

    @pytest.mark.parametrize(
        "text, where",
        [
            ("2 3\n", "line 1"),
            ("a b c\n", "line 1"),
            ("1 3 1\n4 1.0\n", "line 2"),
            ("1 3 1\n0 1.0\n", "line 2"),
            ("2 3 2\n1 1.0\n2 1.0 3\n", "line 3"),
            ("1 3 2\n1 1.0 1 2.0\n", "line 2"),
            ("1 3 5\n1 1.0\n", "non-zeros"),
            ("2 3 1\n1 1.0\n", "rows"),
        ],
    )
    def test_errors_name_the_problem(self, text, where):
        with pytest.raises(FormatError, match=where):
            read_matrix(io.StringIO(text))

    def test_round_trip(self, rng):
        c = _random_corpus(rng, raw_counts=False)
        buf = io.StringIO()
        write_matrix(c, buf)
        back = read_matrix(io.StringIO(buf.getvalue()))
        assert back.n_docs == c.n_docs and back.vocab_size == c.vocab_size
        for a, b in zip(c.docs, back.docs):
            assert np.array_equal(a.indices, b.indices)
            assert np.allclose(a.values, b.values, rtol=1e-5)

    def test_file_round_trip(self, rng, tmp_path):
        c = _random_corpus(rng)
        path = tmp_path / "c.mat"
        write_matrix(c, path)
        back = read_matrix(path)
        assert all(a == b for a, b in zip(c.docs, back.docs))


class TestReadLabels:
    def test_first_appearance_order(self):
        ls = read_labels(io.StringIO("A\nB\nA\n"), 3)
        assert ls.labels == [0, 1, 0] and ls.n_classes == 2

    def test_single_class(self):
        assert read_labels(io.StringIO("x\nx\nx\nx\n"), 4).n_classes == 1

    def test_line_count_mismatch(self):
        with pytest.raises(FormatError):
            read_labels(io.StringIO("A\nB\n"), 3)

    def test_distinct_count_oracle(self, rng):
        tokens = [f"class{int(t)}" for t in rng.integers(0, 13, 200)]
        rng.shuffle(tokens)
        ls = read_labels(io.StringIO("\n".join(tokens) + "\n"), 200)
        assert ls.n_classes == len(set(tokens))
        # same token -> same id
        for a, b in zip(tokens, ls.labels):
            assert ls.names[b] == a

    def test_write_round_trip(self, tmp_path):
        ls = read_labels(io.StringIO("b\na\nb\n"))
        write_labels(ls, tmp_path / "l")
        assert read_labels(tmp_path / "l").labels == ls.labels


class TestTfidf:
    def test_ubiquitous_term_dropped(self):
        c = Corpus([SparseVector([0, 1], [2.0, 1.0], 3), SparseVector([0], [5.0], 3)], 3)
        w = tfidf_weight(c)
        assert w.docs[0].pairs() == [(1, math.log(2))]
        assert w.docs[1].nnz == 0
        assert w.nnz == 1

    def test_single_doc(self):
        w = tfidf_weight(Corpus([SparseVector([0], [3.0], 1)], 1))
        assert w.nnz == 0

    def test_hand_table(self):
        rows = [
            {0: 3, 2: 1},
            {0: 1, 1: 2},
            {1: 1, 3: 4},
            {0: 2, 3: 1, 4: 1},
            {2: 5},
        ]
        dim, n = 5, len(rows)
        c = Corpus([SparseVector.from_pairs(r.items(), dim) for r in rows], dim)
        df = {t: sum(t in r for r in rows) for t in range(dim)}
        w = tfidf_weight(c)
        for r, v in zip(rows, w.docs):
            expected = {t: tf * math.log(n / df[t]) for t, tf in r.items()}
            got = dict(v.pairs())
            assert got.keys() == {t for t, x in expected.items() if x != 0.0}
            for t, x in got.items():
                assert abs(x - expected[t]) < 1e-9

    def test_weights_strictly_positive(self, rng):
        w = tfidf_weight(_random_corpus(rng))
        assert all((v.values > 0).all() for v in w.docs)


class TestCull:
    def test_keep_all_is_identity(self, rng):
        c = _random_corpus(rng)
        culled, term_map = cull_terms(c, c.vocab_size + 5)
        assert term_map == {t: t for t in range(c.vocab_size)}
        assert all(a == b for a, b in zip(c.docs, culled.docs))

    def test_three_terms(self):
        c = Corpus([SparseVector([0, 1, 2], [5.0, 1.0, 3.0], 3)], 3)
        culled, term_map = cull_terms(c, 2)
        assert term_map == {0: 0, 2: 1}
        assert culled.docs[0].pairs() == [(0, 5.0), (1, 3.0)]
        assert culled.vocab_size == 2

    def test_ties_go_to_lower_id(self):
        c = Corpus([SparseVector([0, 1, 2], [1.0, 2.0, 2.0], 3)], 3)
        _, term_map = cull_terms(c, 1)
        assert term_map == {1: 0}

    def test_full_sort_oracle(self, rng):
        c = tfidf_weight(_random_corpus(rng, n_docs=80, dim=60))
        ranks = {t: 0.0 for t in range(c.vocab_size)}
        for v in c.docs:
            for t, x in v.pairs():
                ranks[t] += x
        for keep in (1, 7, 20, 59):
            top = sorted(ranks, key=lambda t: (-ranks[t], t))[:keep]
            culled, term_map = cull_terms(c, keep)
            assert set(term_map) == set(top)
            assert sorted(term_map.values()) == list(range(keep))
            # relative order preserved
            olds = sorted(term_map)
            assert [term_map[o] for o in olds] == list(range(keep))
            assert culled.nnz <= c.nnz
            assert culled.n_docs == c.n_docs
            inverse = {new: old for old, new in term_map.items()}
            for before, after in zip(c.docs, culled.docs):
                kept = {t: x for t, x in before.pairs() if t in term_map}
                assert {inverse[t]: x for t, x in after.pairs()} == kept

    def test_rejects_keep_zero(self, rng):
        with pytest.raises(ValueError):
            cull_terms(_random_corpus(rng), 0)

    def test_term_map_file(self):
        buf = io.StringIO()
        write_term_map({4: 1, 2: 0}, buf)
        assert buf.getvalue() == "3\n5\n"
