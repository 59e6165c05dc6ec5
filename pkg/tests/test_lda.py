"""Topic model fitting: normalization invariants, degenerate cases, the
separable-corpus oracle, bound monotonicity, and a closed-form bound check."""

import math

import numpy as np
import pytest
from scipy.special import gammaln, psi

from textscale.corpus import DocKey, RawDocument, build_corpus, build_term_matrix
from textscale.lda import (
    LdaConfig,
    LdaTopicModel,
    elbo,
    fit_lda,
    infer_theta,
    load_lda_model,
    save_lda_model,
)


def _block_corpus(docs_per_block=15, tokens=40, seed=7):
    """Two groups of documents over disjoint vocabularies."""
    rng = np.random.default_rng(seed)
    block_a = [f"apple{c}" for c in "abcdefghij"]
    block_b = [f"berry{c}" for c in "abcdefghij"]
    docs = []
    for i in range(docs_per_block):
        words = [block_a[rng.integers(10)] for _ in range(tokens)]
        docs.append(RawDocument(DocKey(f"a{i:02d}", 1992), " ".join(words)))
    for i in range(docs_per_block):
        words = [block_b[rng.integers(10)] for _ in range(tokens)]
        docs.append(RawDocument(DocKey(f"b{i:02d}", 1992), " ".join(words)))
    matrix = build_corpus(docs)
    in_a = np.array([w.startswith("apple") for w in matrix.vocab.words])
    return matrix, in_a


class TestConfig:
    def test_kappa_bounds(self):
        with pytest.raises(ValueError, match="kappa"):
            LdaConfig(k=2, kappa=0.5)
        with pytest.raises(ValueError, match="kappa"):
            LdaConfig(k=2, kappa=1.2)

    def test_eta_defaults_to_inverse_k(self):
        assert LdaConfig(k=4).eta == pytest.approx(0.25)

    def test_symmetric_alpha_entries_equal(self):
        alpha = LdaConfig(k=5).make_alpha()
        assert np.all(alpha == alpha[0])

    def test_asymmetric_alpha_normalized_and_decreasing(self):
        alpha = LdaConfig(k=5, alpha_mode="asymmetric_normalized").make_alpha()
        assert alpha.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(np.diff(alpha) < 0)


class TestFitLda:
    def test_k1_beta_is_smoothed_empirical_distribution(self):
        matrix, _ = _block_corpus()
        cfg = LdaConfig(k=1, seed=0, passes=3, batch_size=1000)
        model = fit_lda(matrix, cfg)
        counts = np.asarray(matrix.counts.sum(axis=1)).ravel()
        expected = (cfg.eta + counts) / (cfg.eta + counts).sum()
        np.testing.assert_allclose(model.beta[0], expected, atol=1e-12)

    def test_k1_theta_is_one(self):
        matrix, _ = _block_corpus()
        model = fit_lda(matrix, LdaConfig(k=1, seed=0, passes=2, batch_size=1000))
        theta = infer_theta(model, matrix).theta
        assert np.all(theta == 1.0)

    def test_separable_corpus_concentrates_topics(self):
        """Each fitted topic puts nearly all mass on one vocabulary block."""
        matrix, in_a = _block_corpus()
        model = fit_lda(matrix, LdaConfig(k=2, seed=0, passes=10, batch_size=1000))
        mass_a = np.array([model.beta[r][in_a].sum() for r in range(2)])
        assert sorted(mass_a)[0] < 0.05 and sorted(mass_a)[1] > 0.95
        theta = infer_theta(model, matrix).theta
        assert np.all(theta.max(axis=1) >= 0.9)

    def test_deterministic_given_seed(self):
        matrix, _ = _block_corpus()
        cfg = dict(k=2, seed=11, passes=3, batch_size=10)
        a = fit_lda(matrix, LdaConfig(**cfg))
        b = fit_lda(matrix, LdaConfig(**cfg))
        assert np.array_equal(a.beta, b.beta)

    def test_row_sums_after_every_pass(self):
        matrix, _ = _block_corpus()
        sums = []

        def on_pass(i, snapshot):
            sums.append(snapshot.beta.sum(axis=1))

        fit_lda(matrix, LdaConfig(k=3, seed=1, passes=4, batch_size=1000), pass_callback=on_pass)
        assert len(sums) == 4
        for s in sums:
            np.testing.assert_allclose(s, 1.0, atol=1e-8)

    def test_beta_strictly_positive(self):
        matrix, _ = _block_corpus()
        model = fit_lda(matrix, LdaConfig(k=2, seed=0, passes=2, batch_size=7))
        assert np.all(model.beta > 0)

    def test_empty_corpus_rejected(self):
        matrix = build_term_matrix([], [])
        with pytest.raises(ValueError, match="empty"):
            fit_lda(matrix, LdaConfig(k=2))


class TestInferTheta:
    def test_zero_token_document_gets_prior(self):
        keys = [DocKey("a", 2000), DocKey("b", 2000), DocKey("empty", 2000)]
        matrix = build_term_matrix([["x", "y"], ["y", "z"], []], keys)
        model = fit_lda(matrix, LdaConfig(k=3, seed=2, passes=2, batch_size=10))
        theta = infer_theta(model, matrix).theta
        np.testing.assert_allclose(theta[2], model.alpha / model.alpha.sum(), atol=1e-12)

    def test_rows_sum_to_one(self):
        matrix, _ = _block_corpus()
        model = fit_lda(matrix, LdaConfig(k=4, seed=3, passes=3, batch_size=1000))
        theta = infer_theta(model, matrix).theta
        np.testing.assert_allclose(theta.sum(axis=1), 1.0, atol=1e-8)
        assert np.all(theta >= 0)

    def test_vocabulary_mismatch_rejected(self):
        matrix, _ = _block_corpus()
        other = build_term_matrix([["foo", "bar"], ["bar"]],
                                  [DocKey("x", 2000), DocKey("y", 2000)])
        model = fit_lda(matrix, LdaConfig(k=2, seed=0, passes=1, batch_size=1000))
        with pytest.raises(ValueError, match="vocabular"):
            infer_theta(model, other)


class TestElbo:
    def test_pure_function(self):
        matrix, _ = _block_corpus(docs_per_block=5)
        model = fit_lda(matrix, LdaConfig(k=2, seed=0, passes=2, batch_size=1000))
        assert elbo(model, matrix) == elbo(model, matrix)

    def test_monotone_across_passes_in_batch_mode(self):
        matrix, _ = _block_corpus(docs_per_block=8)
        values = []
        for passes in (1, 3, 6, 10):
            model = fit_lda(matrix, LdaConfig(k=2, seed=0, passes=passes, batch_size=1000))
            values.append(elbo(model, matrix))
        for earlier, later in zip(values, values[1:]):
            assert later >= earlier - 1e-6

    def test_closed_form_single_word_corpus(self):
        """One document, one word, k=1: every term of the bound cancels."""
        matrix = build_term_matrix([["word"]], [DocKey("d", 2000)])
        model = fit_lda(matrix, LdaConfig(k=1, seed=0, passes=1, batch_size=10))
        assert elbo(model, matrix) == pytest.approx(0.0, abs=1e-12)

    def test_closed_form_three_token_corpus(self):
        """One document 'a a b', k=1, eta=1: the word term cancels against the
        topic prior term and the bound reduces to
        lnG(3) + 2 lnG(2) - lnG(5) = -ln 12. Derived by hand twice."""
        matrix = build_term_matrix([["a", "a", "b"]], [DocKey("d", 2000)])
        cfg = LdaConfig(k=1, eta=1.0, seed=0, passes=2, batch_size=10)
        model = fit_lda(matrix, cfg)
        # independent evaluation of the bound from its definition
        lam = np.array([3.0, 2.0])       # eta + counts
        gamma = 4.0                      # alpha + total tokens
        elog_beta = psi(lam) - psi(lam.sum())
        by_definition = (
            2 * elog_beta[0] + 1 * elog_beta[1]          # E[log p(w|theta,beta)]
            + (1.0 - gamma) * 0.0                        # (alpha-gamma) E[log theta]
            + gammaln(gamma) - gammaln(1.0)
            + gammaln(1.0) - gammaln(gamma)
            + float(((1.0 - lam) * elog_beta).sum())     # (eta-lam) E[log beta]
            + float((gammaln(lam) - gammaln(1.0)).sum())
            + gammaln(2 * 1.0) - gammaln(lam.sum())
        )
        assert by_definition == pytest.approx(-math.log(12.0), abs=1e-12)
        assert elbo(model, matrix) == pytest.approx(-math.log(12.0), abs=1e-9)

    def test_loaded_model_cannot_score(self, tmp_path):
        matrix, _ = _block_corpus(docs_per_block=4)
        model = fit_lda(matrix, LdaConfig(k=2, seed=0, passes=1, batch_size=1000))
        path = tmp_path / "model.txt"
        save_lda_model(model, path)
        loaded = load_lda_model(path)
        with pytest.raises(ValueError, match="variational state"):
            elbo(loaded, matrix)


class TestSerialization:
    def test_round_trip(self, tmp_path):
        matrix, _ = _block_corpus(docs_per_block=4)
        model = fit_lda(matrix, LdaConfig(k=3, seed=5, passes=2, batch_size=1000))
        path = tmp_path / "model.txt"
        save_lda_model(model, path)
        loaded = load_lda_model(path)
        assert np.array_equal(loaded.beta, model.beta)
        assert np.array_equal(loaded.alpha, model.alpha)

    def test_loaded_model_infers(self, tmp_path):
        matrix, _ = _block_corpus(docs_per_block=4)
        model = fit_lda(matrix, LdaConfig(k=2, seed=5, passes=3, batch_size=1000))
        path = tmp_path / "model.txt"
        save_lda_model(model, path)
        loaded = load_lda_model(path)
        np.testing.assert_allclose(
            infer_theta(loaded, matrix).theta, infer_theta(model, matrix).theta, atol=0
        )


class TestEstimator:
    def test_fit_transform(self):
        matrix, _ = _block_corpus(docs_per_block=6)
        est = LdaTopicModel(k=2, seed=0, passes=5, batch_size=1000)
        theta = est.fit(matrix).transform(matrix)
        assert theta.shape == (12, 2)
        np.testing.assert_allclose(theta.sum(axis=1), 1.0, atol=1e-8)

    def test_get_params(self):
        est = LdaTopicModel(k=9, alpha_mode="asymmetric_normalized")
        assert est.get_params()["k"] == 9
