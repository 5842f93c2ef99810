"""The four lexicon-learning methods and log min-max rescaling."""


import numpy as np
import pytest

from lexlearn.corpus import Document, build_corpus
from lexlearn.embeddings import centroid
from lexlearn.errors import DegenerateLabelsError
from lexlearn.induction import (
    Lexicon,
    fit_mean_binary,
    fit_mean_star,
    fit_mlffn,
    fit_regression_weights,
    load_lexicon,
    rescale_log_minmax,
    save_lexicon,
)
from lexlearn.neural import NetConfig, forward_batch
from lexlearn.numerics import pearson

from _worlds import (
    brute_force_mean_binary,
    brute_force_mean_star,
    linear_world,
    random_corpus,
)


def toy_corpus():
    docs = [
        Document("d1", ("a", "sad", "story"), {"empathy": 6.0}),
        Document("d2", ("a", "sad", "joke"), {"empathy": 2.0}),
    ]
    return build_corpus(docs, ["empathy"])


class TestMeanStar:
    def test_toy_averages(self):
        lex = fit_mean_star(toy_corpus(), "empathy")
        ratings = lex.ratings_for("empathy")
        assert ratings["sad"] == 4.0
        assert ratings["story"] == 6.0
        assert ratings["joke"] == 2.0

    def test_single_document_word(self):
        lex = fit_mean_star(toy_corpus(), "empathy")
        assert lex.ratings_for("empathy")["story"] == 6.0

    def test_matches_brute_force_exactly(self):
        rng = np.random.default_rng(21)
        for _ in range(10):
            corpus = random_corpus(rng, max_docs=50, max_vocab=80)
            lex = fit_mean_star(corpus, "aff")
            oracle = brute_force_mean_star(corpus, "aff")
            assert lex.ratings_for("aff") == oracle

    def test_ratings_within_label_range(self):
        rng = np.random.default_rng(22)
        corpus = random_corpus(rng)
        labels = [d.ratings["aff"] for d in corpus.documents]
        ratings = fit_mean_star(corpus, "aff").ratings_for("aff")
        assert all(min(labels) <= r <= max(labels) for r in ratings.values())

    def test_rates_exactly_the_vocabulary(self):
        rng = np.random.default_rng(23)
        corpus = random_corpus(rng)
        lex = fit_mean_star(corpus, "aff")
        assert set(lex.entries) == set(corpus.vocab)


class TestMeanBinary:
    def test_median_split_with_high_ties(self):
        docs = [
            Document(f"d{i}", (f"w{i}",), {"aff": float(v)})
            for i, v in enumerate([1, 2, 3, 4, 5])
        ]
        corpus = build_corpus(docs, ["aff"])
        ratings = fit_mean_binary(corpus, "aff").ratings_for("aff")
        # median 3; labels [1,2,3,4,5] -> binary [0,0,1,1,1]
        assert [ratings[f"w{i}"] for i in range(5)] == [0.0, 0.0, 1.0, 1.0, 1.0]

    def test_low_tie_rule(self):
        docs = [
            Document(f"d{i}", (f"w{i}",), {"aff": float(v)})
            for i, v in enumerate([1, 2, 3, 4, 5])
        ]
        corpus = build_corpus(docs, ["aff"])
        ratings = fit_mean_binary(corpus, "aff", ties="low").ratings_for("aff")
        assert [ratings[f"w{i}"] for i in range(5)] == [0.0, 0.0, 0.0, 1.0, 1.0]

    def test_word_only_in_high_documents(self):
        docs = [
            Document("d1", ("lo1",), {"aff": 1.0}),
            Document("d2", ("lo2",), {"aff": 2.0}),
            Document("d3", ("hi", "lo2"), {"aff": 5.0}),
            Document("d4", ("hi",), {"aff": 6.0}),
        ]
        corpus = build_corpus(docs, ["aff"])
        assert fit_mean_binary(corpus, "aff").ratings_for("aff")["hi"] == 1.0

    def test_matches_brute_force_exactly(self):
        rng = np.random.default_rng(24)
        for _ in range(10):
            corpus = random_corpus(rng, max_docs=50, max_vocab=80)
            lex = fit_mean_binary(corpus, "aff")
            assert lex.ratings_for("aff") == brute_force_mean_binary(corpus, "aff")

    def test_ratings_in_unit_interval(self):
        rng = np.random.default_rng(25)
        corpus = random_corpus(rng)
        assert all(
            0.0 <= r <= 1.0 for r in fit_mean_binary(corpus, "aff").ratings_for("aff").values()
        )

    def test_identical_labels_rejected(self):
        docs = [Document(f"d{i}", ("w",), {"aff": 3.0}) for i in range(4)]
        corpus = build_corpus(docs, ["aff"])
        with pytest.raises(DegenerateLabelsError):
            fit_mean_binary(corpus, "aff")


class TestRegressionWeights:
    def test_constant_column_collapses_to_intercept(self):
        docs = [
            Document("d1", ("w",), {"aff": 3.0}),
            Document("d2", ("w",), {"aff": 5.0}),
        ]
        corpus = build_corpus(docs, ["aff"])
        lex = fit_regression_weights(corpus, "aff", ridge_lambda=0.0)
        assert lex.ratings_for("aff")["w"] == pytest.approx(0.0, abs=1e-12)
        assert lex.provenance["intercept"] == pytest.approx(4.0, abs=1e-12)

    def test_orthogonal_documents_reproduce_labels(self):
        docs = [
            Document("d1", ("a",), {"aff": 4.0}),
            Document("d2", ("b",), {"aff": 6.0}),
        ]
        corpus = build_corpus(docs, ["aff"])
        lex = fit_regression_weights(corpus, "aff", ridge_lambda=0.0)
        ratings = lex.ratings_for("aff")
        intercept = lex.provenance["intercept"]
        assert intercept + ratings["a"] == pytest.approx(4.0, abs=1e-6)
        assert intercept + ratings["b"] == pytest.approx(6.0, abs=1e-6)

    def test_solution_beats_single_coordinate_perturbations(self):
        rng = np.random.default_rng(26)
        corpus = random_corpus(rng, max_docs=30, max_vocab=25)
        lam = 0.5
        lex = fit_regression_weights(corpus, "aff", ridge_lambda=lam)
        words = sorted(corpus.vocab)
        coef = np.array([lex.ratings_for("aff")[w] for w in words])
        intercept = lex.provenance["intercept"]
        X = np.zeros((len(corpus), len(words)))
        col = {w: j for j, w in enumerate(words)}
        for i, doc in enumerate(corpus.documents):
            for tok in doc.tokens:
                X[i, col[tok]] += 1.0 / len(doc.tokens)
        y = np.array([d.ratings["aff"] for d in corpus.documents])

        def loss(c):
            resid = y - intercept - X @ c
            return float(resid @ resid + lam * c @ c)

        base = loss(coef)
        for j in range(len(words)):
            for delta in (1e-3, -1e-3):
                bumped = coef.copy()
                bumped[j] += delta
                assert loss(bumped) >= base


class TestMlffn:
    def test_planted_linear_world_heldout_words(self):
        corpus, table, _, planted, heldout = linear_world(
            0, n_words=150, dim=24, n_docs=500, words_per_doc=5, noise=0.0,
            n_heldout=50,
        )
        cfg = NetConfig(24, 1, (32,), l2=1e-3, max_epochs=150, dropout_input=0,
                        dropout_hidden=0, seed=0)
        lex, _ = fit_mlffn(corpus, ["aff"], table, cfg, rate_all_embedded=True)
        pred = [lex.entries[w][0] for w in heldout]
        ref = [planted[w] for w in heldout]
        assert pearson(pred, ref) >= 0.95

    def test_oov_words_share_the_zero_vector_output(self):
        corpus, table, _, _, _ = linear_world(
            1, n_words=40, dim=8, n_docs=60, words_per_doc=4, noise=0.0
        )
        docs = list(corpus.documents)
        docs.append(Document("extra", ("unembedded1", "unembedded2"), {"aff": 1.0}))
        corpus2 = build_corpus(docs, ["aff"])
        cfg = NetConfig(8, 1, (8,), dropout_input=0, dropout_hidden=0,
                        max_epochs=10, seed=1)
        lex, net = fit_mlffn(corpus2, ["aff"], table, cfg, include_oov_words=True)
        zero_out = forward_batch(net, np.zeros((1, 8)))[0, 0]
        assert lex.entries["unembedded1"][0] == pytest.approx(zero_out, abs=0)
        assert lex.entries["unembedded2"][0] == pytest.approx(zero_out, abs=0)
        assert lex.provenance["zero_vector_words"] == 2

    def test_document_predictions_beat_mean_star_reconstruction(self):
        corpus, table, _, _, _ = linear_world(
            2, n_words=150, dim=24, n_docs=500, words_per_doc=5, noise=0.0
        )
        cfg = NetConfig(24, 1, (32,), l2=1e-3, max_epochs=150, dropout_input=0,
                        dropout_hidden=0, seed=2)
        lex, net = fit_mlffn(corpus, ["aff"], table, cfg)
        X = np.stack([centroid(d, table) for d in corpus.documents])
        y = [d.ratings["aff"] for d in corpus.documents]
        net_r = pearson(forward_batch(net, X).ravel(), y)
        star = fit_mean_star(corpus, "aff").ratings_for("aff")
        star_doc = [float(np.mean([star[t] for t in d.tokens])) for d in corpus.documents]
        assert net_r > pearson(star_doc, y)

    def test_empty_intersection_is_an_error(self):
        corpus, _, _, _, _ = linear_world(
            4, n_words=20, dim=6, n_docs=30, words_per_doc=4, noise=0.0
        )
        from lexlearn.embeddings import EmbeddingTable
        from lexlearn.errors import DataError

        alien = EmbeddingTable(6, {"zzz": np.ones(6, dtype=np.float32)})
        cfg = NetConfig(6, 1, (4,), dropout_input=0, dropout_hidden=0,
                        max_epochs=3, seed=4)
        with pytest.raises(DataError):
            fit_mlffn(corpus, ["aff"], alien, cfg, rate_all_embedded=True)

    def test_default_rates_corpus_vocab_intersection(self):
        corpus, table, _, _, heldout = linear_world(
            3, n_words=40, dim=8, n_docs=60, words_per_doc=4, noise=0.0,
            n_heldout=10,
        )
        cfg = NetConfig(8, 1, (8,), dropout_input=0, dropout_hidden=0,
                        max_epochs=5, seed=3)
        lex, _ = fit_mlffn(corpus, ["aff"], table, cfg)
        assert set(lex.entries) == set(corpus.vocab) & set(table.vectors)
        assert not set(heldout) & set(lex.entries)


class TestRescale:
    def test_forced_endpoints(self):
        lex = Lexicon(("v",), {"a": np.array([0.0]), "b": np.array([np.e - 1.0])})
        out = rescale_log_minmax(lex, 1.0, 7.0)
        assert out.entries["a"][0] == 1.0
        assert out.entries["b"][0] == 7.0

    def test_random_min_max_map_to_bounds(self):
        rng = np.random.default_rng(27)
        for _ in range(20):
            values = rng.normal(0, 5, size=rng.integers(2, 40))
            lex = Lexicon(
                ("v",), {f"w{i}": np.array([v]) for i, v in enumerate(values)}
            )
            out = rescale_log_minmax(lex, 1.0, 7.0)
            got = out.values("v")
            assert got.min() == 1.0
            assert got.max() == 7.0

    def test_rank_preserved(self):
        rng = np.random.default_rng(28)
        values = rng.normal(0, 3, size=60)
        lex = Lexicon(("v",), {f"w{i}": np.array([v]) for i, v in enumerate(values)})
        out = rescale_log_minmax(lex, 1.0, 7.0)
        got = np.array([out.entries[f"w{i}"][0] for i in range(60)])
        assert np.array_equal(np.argsort(values), np.argsort(got))

    def test_argmax_argmin_preserved(self):
        rng = np.random.default_rng(29)
        values = rng.normal(0, 2, size=30)
        lex = Lexicon(("v",), {f"w{i}": np.array([v]) for i, v in enumerate(values)})
        out = rescale_log_minmax(lex, 1.0, 7.0)
        got = np.array([out.entries[f"w{i}"][0] for i in range(30)])
        assert np.argmax(values) == np.argmax(got)
        assert np.argmin(values) == np.argmin(got)

    def test_all_equal_collapses_to_midpoint_with_warning(self):
        lex = Lexicon(("v",), {"a": np.array([2.0]), "b": np.array([2.0])})
        with pytest.warns(UserWarning, match="midpoint"):
            out = rescale_log_minmax(lex, 1.0, 7.0)
        assert out.entries["a"][0] == 4.0

    def test_bad_range(self):
        lex = Lexicon(("v",), {"a": np.array([1.0]), "b": np.array([2.0])})
        with pytest.raises(ValueError):
            rescale_log_minmax(lex, 7.0, 1.0)


class TestLexiconIO:
    def test_roundtrip_exact(self, tmp_path):
        rng = np.random.default_rng(30)
        lex = Lexicon(
            ("empathy", "distress"),
            {
                f"w{i}": np.array([rng.normal(), rng.normal()])
                for i in range(50)
            },
            {"method": "mean_star"},
        )
        path = tmp_path / "lex.tsv"
        save_lexicon(lex, path)
        back = load_lexicon(path)
        assert back.constructs == lex.constructs
        assert set(back.entries) == set(lex.entries)
        for w in lex.entries:
            assert np.array_equal(back.entries[w], lex.entries[w])
        assert back.provenance == {"method": "mean_star"}

    def test_deterministic_refit(self):
        rng = np.random.default_rng(31)
        corpus = random_corpus(rng)
        a = fit_mean_star(corpus, "aff").ratings_for("aff")
        b = fit_mean_star(corpus, "aff").ratings_for("aff")
        assert a == b
