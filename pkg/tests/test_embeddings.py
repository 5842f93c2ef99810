"""Word-vector loading, centroids, cosine."""

import numpy as np
import pytest

from lexlearn.corpus import Document
from lexlearn.embeddings import EmbeddingTable, centroid, cosine, load_embeddings
from lexlearn.errors import DimensionError, FormatError


@pytest.fixture
def small_vec(tmp_path):
    path = tmp_path / "small.vec"
    path.write_text("2 3\napple 1 0 0\nbanana 0 1 0\n", encoding="utf-8")
    return str(path)


class TestLoad:
    def test_header_skipped_dim_inferred(self, small_vec):
        table = load_embeddings(small_vec)
        assert table.dim == 3
        assert len(table) == 2
        assert np.allclose(table.lookup("apple"), [1, 0, 0])

    def test_restrict_to(self, small_vec):
        table = load_embeddings(small_vec, restrict_to={"apple"})
        assert len(table) == 1
        assert "banana" not in table

    def test_no_header_file(self, tmp_path):
        path = tmp_path / "n.vec"
        path.write_text("apple 1 0 0\nbanana 0 1 0\n", encoding="utf-8")
        assert load_embeddings(str(path)).dim == 3

    def test_oov_lookup_is_zero_vector(self, small_vec):
        table = load_embeddings(small_vec)
        vec = table.lookup("zzzunknown")
        assert vec.shape == (3,)
        assert not vec.any()

    def test_wrong_arity_skipped_within_budget(self, tmp_path):
        lines = ["w%03d 1 2 3" % i for i in range(200)] + ["broken 1 2"]
        path = tmp_path / "s.vec"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        table = load_embeddings(str(path))
        assert table.skipped_lines == 1
        assert len(table) == 200

    def test_skip_budget_exceeded(self, tmp_path):
        path = tmp_path / "bad.vec"
        path.write_text("a 1 2 3\nb 1 2\nc 4 5 6\n", encoding="utf-8")
        with pytest.raises(FormatError, match="budget"):
            load_embeddings(str(path))

    def test_empty_table_is_error(self, tmp_path):
        path = tmp_path / "e.vec"
        path.write_text("", encoding="utf-8")
        with pytest.raises(FormatError):
            load_embeddings(str(path))

    def test_restrict_to_nothing_is_error(self, small_vec):
        with pytest.raises(FormatError):
            load_embeddings(small_vec, restrict_to={"nope"})


class TestCentroid:
    def test_two_words(self, small_vec):
        table = load_embeddings(small_vec)
        doc = Document("d", ("apple", "banana"), {})
        assert np.allclose(centroid(doc, table), [0.5, 0.5, 0.0])

    def test_oov_dilutes_the_mean(self, small_vec):
        table = load_embeddings(small_vec)
        got = centroid(["apple", "zzzunknown"], table)
        assert np.allclose(got, [0.5, 0.0, 0.0])

    def test_repetition_counts(self, small_vec):
        table = load_embeddings(small_vec)
        assert np.allclose(centroid(["apple", "apple"], table), [1.0, 0.0, 0.0])

    def test_single_token_equals_vector(self):
        rng = np.random.default_rng(0)
        vec = rng.standard_normal(5).astype(np.float32)
        table = EmbeddingTable(5, {"w": vec})
        assert np.array_equal(centroid(["w"], table), vec.astype(np.float64))

    def test_norm_bounded_by_max_vector_norm(self):
        rng = np.random.default_rng(1)
        words = [f"w{i}" for i in range(30)]
        table = EmbeddingTable(
            4, {w: rng.standard_normal(4).astype(np.float32) for w in words}
        )
        max_norm = max(np.linalg.norm(v) for v in table.vectors.values())
        for _ in range(50):
            toks = list(rng.choice(words + ["zzz"], size=rng.integers(1, 12)))
            assert np.linalg.norm(centroid(toks, table)) <= max_norm + 1e-12

    def test_table_not_mutated(self, small_vec):
        table = load_embeddings(small_vec)
        before = {w: v.copy() for w, v in table.vectors.items()}
        centroid(["apple", "banana", "apple"], table)
        vec = table.lookup("apple")
        vec[:] = 99.0  # lookup returns a copy
        for w, v in table.vectors.items():
            assert np.array_equal(v, before[w])


class TestCosine:
    def test_parallel(self):
        assert cosine([1, 0], [1, 0]) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert cosine([1, 0], [0, 1]) == pytest.approx(0.0)

    def test_collinear_scaled(self):
        assert cosine([1, 2], [2, 4]) == pytest.approx(1.0)

    def test_zero_norm_convention(self):
        assert cosine([0, 0], [1, 2]) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            cosine([1, 0], [1, 0, 0])
