"""Evaluation statistics and the batch grid."""

import numpy as np
import pytest

from textscale.corpus import DocKey, build_corpus
from textscale.evaluate import (
    BatchSpec,
    GroupStats,
    ScoreRow,
    ScoreTable,
    ci_overlap_stats,
    diff_of_means,
    discrepancies,
    pearson,
    range_vs_size,
    run_batch,
    run_batch_grid,
    summary_by_year,
    training_from_table,
)
from textscale.synth import make_two_pole_corpus


def _table(pairs):
    return ScoreTable.from_pairs([(DocKey(e, y), s) for (e, y), s in pairs])


class TestPearson:
    def test_identical_tables(self):
        t = _table([(("a", 1), 1.0), (("b", 1), 2.0), (("c", 1), 5.0)])
        assert pearson(t, t) == pytest.approx(1.0, abs=1e-12)

    def test_sign_flip(self):
        a = _table([(("a", 1), 1.0), (("b", 1), 2.0), (("c", 1), 5.0)])
        b = _table([(("a", 1), -1.0), (("b", 1), -2.0), (("c", 1), -5.0)])
        assert pearson(a, b) == pytest.approx(-1.0, abs=1e-12)

    def test_hand_computed_value(self):
        # cov/(sd*sd) computed by hand for (1,2,3) vs (2,4,7):
        # centered products sum to 5, sum sq devs are 2 and 114/9 -> 5/sqrt(228/9)
        a = _table([(("a", 1), 1.0), (("b", 1), 2.0), (("c", 1), 3.0)])
        b = _table([(("a", 1), 2.0), (("b", 1), 4.0), (("c", 1), 7.0)])
        expected = 5.0 / np.sqrt(228.0 / 9.0)
        assert expected == pytest.approx(0.99339927, abs=1e-8)
        assert pearson(a, b) == pytest.approx(expected, abs=1e-12)

    def test_intersection_only(self):
        a = _table([(("a", 1), 1.0), (("b", 1), 2.0), (("zz", 9), 99.0)])
        b = _table([(("a", 1), 1.0), (("b", 1), 2.0), (("yy", 8), -5.0)])
        assert pearson(a, b) == pytest.approx(1.0, abs=1e-12)

    def test_symmetry_and_affine_invariance(self):
        rng = np.random.default_rng(0)
        a = _table([((f"e{i}", 1), float(v)) for i, v in enumerate(rng.standard_normal(10))])
        b = _table([((f"e{i}", 1), float(v)) for i, v in enumerate(rng.standard_normal(10))])
        assert pearson(a, b) == pytest.approx(pearson(b, a), abs=1e-15)
        scaled = ScoreTable({k: ScoreRow(score=3.0 * r.score + 7.0) for k, r in b.items()})
        assert pearson(a, scaled) == pytest.approx(pearson(a, b), abs=1e-12)

    def test_errors(self):
        a = _table([(("a", 1), 1.0)])
        with pytest.raises(ValueError, match="shared"):
            pearson(a, a)
        flat = _table([(("a", 1), 2.0), (("b", 1), 2.0)])
        other = _table([(("a", 1), 1.0), (("b", 1), 3.0)])
        with pytest.raises(ValueError, match="variance"):
            pearson(flat, other)


class TestSummaryByYear:
    def test_single_doc_years_have_zero_std(self):
        t = _table([(("a", 1993), 1.0), (("b", 1994), 2.0)])
        out = summary_by_year(t)
        assert out["1993"].std == 0.0 and out["1994"].std == 0.0

    def test_hand_tally(self):
        t = _table([
            (("a", 1993), 1.0), (("b", 1993), 3.0),
            (("c", 1994), -1.0), (("d", 1994), 0.0), (("e", 1994), 4.0),
            (("f", 1995), 2.5),
        ])
        out = summary_by_year(t)
        assert out["1993"].n == 2
        assert out["1993"].mean == pytest.approx(2.0)
        assert out["1993"].std == pytest.approx(1.0)  # population: sqrt(((1)^2+(1)^2)/2)
        assert out["1994"].n == 3
        assert out["1994"].mean == pytest.approx(1.0)
        assert out["1994"].min == -1.0 and out["1994"].max == 4.0
        assert out["all"].n == 6
        assert out["all"].mean == pytest.approx(9.5 / 6.0)

    def test_all_row_partitions(self):
        rng = np.random.default_rng(1)
        t = _table([((f"e{i}", 1990 + int(rng.integers(5))), float(v))
                    for i, v in enumerate(rng.standard_normal(30))])
        out = summary_by_year(t)
        assert sum(s.n for label, s in out.items() if label != "all") == out["all"].n


class TestDiscrepancies:
    def test_equal_tables_all_zero(self):
        t = _table([(("a", 1), 1.0), (("b", 1), 2.0)])
        pos, neg = discrepancies(t, t, top=2)
        assert all(d.delta == 0.0 for d in pos + neg)
        assert [d.key for d in pos] == sorted(d.key for d in pos)

    def test_hand_table(self):
        a = _table([(("a", 1), 5.0), (("b", 1), 1.0), (("c", 1), 0.0),
                    (("d", 1), 2.0), (("e", 1), -3.0)])
        b = _table([(("a", 1), 1.0), (("b", 1), 1.5), (("c", 1), 4.0),
                    (("d", 1), 0.0), (("e", 1), 0.0)])
        pos, neg = discrepancies(a, b, top=2)
        assert [(d.key.entity, d.delta) for d in pos] == [("a", 4.0), ("d", 2.0)]
        assert [(d.key.entity, d.delta) for d in neg] == [("c", -4.0), ("e", -3.0)]

    def test_top_clamped(self):
        t = _table([(("a", 1), 1.0), (("b", 1), 2.0)])
        pos, neg = discrepancies(t, t, top=10)
        assert len(pos) == 2 and len(neg) == 2


class TestCiOverlap:
    @staticmethod
    def _with_cis(intervals):
        rows = {}
        for i, (lo, hi) in enumerate(intervals):
            rows[DocKey(f"e{i}", 1)] = ScoreRow(score=(lo + hi) / 2, ci_low=lo, ci_high=hi)
        return ScoreTable(rows)

    def test_disjoint(self):
        t = self._with_cis([(0, 1), (2, 3), (4, 5)])
        out = ci_overlap_stats(t)
        assert all(v == 0 for v in out.per_key.values())
        assert out.mean == 0.0

    def test_identical(self):
        t = self._with_cis([(0, 1)] * 5)
        out = ci_overlap_stats(t)
        assert all(v == 4 for v in out.per_key.values())
        assert out.mean == 4.0

    def test_matches_pairwise_oracle(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            n = int(rng.integers(2, 40))
            lows = rng.uniform(-5, 5, n)
            intervals = [(float(lo), float(lo + w))
                         for lo, w in zip(lows, rng.uniform(0, 3, n))]
            t = self._with_cis(intervals)
            out = ci_overlap_stats(t)
            keys = list(t.keys())
            for i, ki in enumerate(keys):
                expected = sum(
                    1 for j, kj in enumerate(keys)
                    if i != j
                    and intervals[i][0] <= intervals[j][1]
                    and intervals[j][0] <= intervals[i][1]
                )
                assert out.per_key[ki] == expected

    def test_missing_ci_rejected(self):
        t = _table([(("a", 1), 1.0), (("b", 1), 2.0)])
        with pytest.raises(ValueError, match="confidence"):
            ci_overlap_stats(t)


class TestDiffOfMeans:
    def test_left_right_government_groups(self):
        """Printed group statistics for the index-bias test: z lands at 5.80
        and the two-sided p is far below 1e-5."""
        out = diff_of_means(GroupStats(-0.127, 0.024, 802), GroupStats(-0.328, 0.025, 603))
        assert abs(out.z) == pytest.approx(5.80, abs=0.05)
        assert out.p < 0.00001

    def test_statist_groups_directional(self):
        """Second printed pair: the directional p is below 6e-4 (two-sided is
        about 7.7e-4)."""
        out = diff_of_means(GroupStats(-0.132, 0.0196, 1057), GroupStats(-0.215, 0.015, 1977))
        assert out.p_one_sided < 0.0006
        assert out.p == pytest.approx(2 * out.p_one_sided, abs=1e-15)
        assert 0.0006 < out.p < 0.0008

    def test_equal_groups(self):
        out = diff_of_means(GroupStats(1.0, 0.5, 10), GroupStats(1.0, 0.5, 10))
        assert out.z == 0.0 and out.p == 1.0

    def test_antisymmetric(self):
        g1, g2 = GroupStats(0.3, 0.1, 5), GroupStats(-0.2, 0.2, 7)
        a = diff_of_means(g1, g2)
        b = diff_of_means(g2, g1)
        assert a.z == pytest.approx(-b.z, abs=1e-15)
        assert a.p == pytest.approx(b.p, abs=1e-15)

    def test_zero_denominator(self):
        with pytest.raises(ValueError, match="zero"):
            diff_of_means(GroupStats(1.0, 0.0, 5), GroupStats(2.0, 0.0, 5))


class TestRangeVsSize:
    def test_zero_width(self):
        rows = {DocKey("a", 1): ScoreRow(score=1.0, ci_low=1.0, ci_high=1.0)}
        out = range_vs_size(ScoreTable(rows), {DocKey("a", 1): 100.0})
        assert out == [(DocKey("a", 1), 100.0, 0.0)]

    def test_echoes_pairs(self):
        rows = {
            DocKey("a", 1): ScoreRow(score=1.0, ci_low=0.0, ci_high=2.0),
            DocKey("b", 1): ScoreRow(score=1.0, ci_low=0.5, ci_high=1.0),
        }
        sizes = {DocKey("a", 1): 10.0, DocKey("b", 1): 1000.0}
        out = range_vs_size(ScoreTable(rows), sizes)
        assert (DocKey("a", 1), 10.0, 2.0) in out
        assert (DocKey("b", 1), 1000.0, 0.5) in out


class TestScoreTableCsv:
    def test_round_trip(self, tmp_path):
        rows = {
            DocKey("a", 1993): ScoreRow(score=1.25, std_error=0.1, ci_low=1.05, ci_high=1.45),
            DocKey("b", 1994): ScoreRow(score=-0.5),
        }
        t = ScoreTable(rows)
        path = tmp_path / "scores.csv"
        t.to_csv(path)
        back = ScoreTable.from_csv(path)
        assert back[DocKey("a", 1993)] == rows[DocKey("a", 1993)]
        assert back[DocKey("b", 1994)].std_error is None

    def test_duplicate_key_rejected(self, tmp_path):
        path = tmp_path / "dup.csv"
        path.write_text("entity,year,score\na,1,1.0\na,1,2.0\n")
        with pytest.raises(ValueError, match="duplicate"):
            ScoreTable.from_csv(path)


class TestBatchGrid:
    @pytest.fixture(scope="class")
    @staticmethod
    def corpus():
        synth = make_two_pole_corpus(n_train=20, n_virgin=40, tokens_per_doc=300, seed=5)
        matrix = build_corpus(synth.docs)
        return synth, {"A": matrix}

    def test_wordscores_batch_equals_direct_composition(self, corpus):
        synth, matrices = corpus
        spec = BatchSpec(approach="wordscores")
        table = run_batch(matrices, spec, synth.training)
        from textscale.wordscores import Wordscores

        direct = Wordscores().fit(matrices["A"], synth.training).predict(matrices["A"])
        expected = {s.key: s.rescaled for s in direct}
        assert set(table.keys()) == set(expected)
        for key, row in table.items():
            assert row.score == expected[key]

    def test_identical_specs_identical_results(self, corpus):
        synth, matrices = corpus
        spec = BatchSpec(approach="lsa_trees", k=3, tree_method="tree", min_leaf=2, seed=4)
        report = run_batch_grid(matrices, [spec, spec], synth.training, synth.latent)
        assert report.results[0].r == report.results[1].r

    def test_grid_covers_specs_and_caches_features(self, corpus):
        synth, matrices = corpus
        specs = [
            BatchSpec(approach="wordscores"),
            BatchSpec(approach="lsa_trees", k=3, tree_method="tree", min_leaf=2, seed=1),
            BatchSpec(approach="lsa_trees", k=3, tree_method="rf", n_trees=5, min_leaf=2, seed=1),
        ]
        report = run_batch_grid(matrices, specs, synth.training, synth.latent)
        assert len(report.results) == 3
        assert all(-1.0 <= res.r <= 1.0 for res in report.results)
        rendered = report.render()
        assert "wordscores" in rendered and "with 3 topics" in rendered

    def test_batch_tables_cover_virgin_docs_only(self, corpus):
        synth, matrices = corpus
        table = run_batch(matrices, BatchSpec(approach="wordscores"), synth.training)
        assert set(table.keys()) == set(synth.virgin_keys)

    def test_tree_fields_ignored_for_wordscores(self, corpus):
        synth, matrices = corpus
        a = run_batch(matrices, BatchSpec(approach="wordscores", tree_method="rf"), synth.training)
        b = run_batch(matrices, BatchSpec(approach="wordscores", tree_method="ada"), synth.training)
        assert a.to_csv_text() == b.to_csv_text()

    def test_determinism_byte_identical(self, corpus):
        synth, matrices = corpus
        for spec in (
            BatchSpec(approach="wordscores"),
            BatchSpec(approach="lsa_trees", k=3, tree_method="erf", n_trees=4, min_leaf=2, seed=3),
            BatchSpec(approach="lda_trees", k=2, tree_method="ada", n_trees=4, min_leaf=2, seed=3),
        ):
            a = run_batch(matrices, spec, synth.training, cache={})
            b = run_batch(matrices, spec, synth.training, cache={})
            assert a.to_csv_text().encode() == b.to_csv_text().encode()


class TestTrainingFromTable:
    def test_year_and_matrix_restriction(self):
        t = _table([(("a", 1992), 1.0), (("b", 1992), -1.0),
                    (("c", 1993), 0.5), (("d", 1992), 2.0)])
        keys = [DocKey("a", 1992), DocKey("b", 1992), DocKey("c", 1993)]
        training = training_from_table(t, years={1992}, restrict_to=keys)
        assert training.doc_keys == [DocKey("a", 1992), DocKey("b", 1992)]
        np.testing.assert_allclose(training.scores, [1.0, -1.0])
