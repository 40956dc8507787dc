import pytest
from hypothesis import given, strategies as st

from prefscale.core import (
    ComparisonGraph,
    Outcome,
    PairJudgment,
    RatingRecord,
    ValidationError,
    all_pairs,
    anchors_from_json,
    anchors_to_json,
    graph_stats,
    induce_pairwise_from_ratings,
    judgment_from_json,
    judgment_to_json,
    sample_pair_budget,
    select_anchors,
    validate_dataset,
)


def rating(rater, image, score, dimension="overall"):
    return RatingRecord(rater=rater, image=image, dimension=dimension, score=score)


class TestValidateDataset:
    def test_empty_inputs_valid(self):
        report = validate_dataset([], [])
        assert report.valid

    def test_out_of_range_score(self):
        report = validate_dataset([rating("r1", "a", 6)], [])
        assert len(report.range_violations) == 1
        assert not report.valid

    def test_self_pair_rejected_at_construction(self):
        with pytest.raises(ValidationError):
            PairJudgment(rater="r1", a="x", b="x", dimension="overall", outcome=Outcome.TIE)

    def test_duplicate_judgment_reported(self):
        j1 = PairJudgment(rater="r1", a="a", b="b", dimension="overall", outcome=Outcome.A_WINS)
        j2 = PairJudgment(rater="r1", a="b", b="a", dimension="overall", outcome=Outcome.B_WINS)
        report = validate_dataset([], [j1, j2])
        assert len(report.duplicate_judgments) == 1

    def test_disconnected_group_reported(self):
        js = [
            PairJudgment(rater="r", a="a", b="b", dimension="overall", outcome=Outcome.TIE),
            PairJudgment(rater="r", a="c", b="d", dimension="overall", outcome=Outcome.TIE),
        ]
        report = validate_dataset([], js)
        assert report.disconnected_groups == [("overall", 2)]


class TestInducePairwise:
    def test_forced_outcomes(self):
        ratings = [rating("r", "a", 4), rating("r", "b", 2), rating("r", "c", 3)]
        out = induce_pairwise_from_ratings(ratings, [("a", "b"), ("b", "c")])
        assert out[0].outcome is Outcome.A_WINS
        assert out[1].outcome is Outcome.B_WINS

    def test_tie(self):
        ratings = [rating("r", "a", 3), rating("r", "b", 3)]
        (j,) = induce_pairwise_from_ratings(ratings, [("a", "b")])
        assert j.outcome is Outcome.TIE

    def test_b_wins(self):
        ratings = [rating("r", "a", 2), rating("r", "b", 5)]
        (j,) = induce_pairwise_from_ratings(ratings, [("a", "b")])
        assert j.outcome is Outcome.B_WINS

    def test_missing_score_names_image_and_rater(self):
        with pytest.raises(ValidationError, match="r1.*zz|zz.*r1"):
            induce_pairwise_from_ratings([rating("r1", "a", 3)], [("a", "zz")])

    @given(st.integers(1, 5), st.integers(1, 5))
    def test_antisymmetric(self, sa, sb):
        ratings = [rating("r", "a", sa), rating("r", "b", sb)]
        (fwd,) = induce_pairwise_from_ratings(ratings, [("a", "b")])
        (rev,) = induce_pairwise_from_ratings(ratings, [("b", "a")])
        assert rev.outcome is fwd.outcome.mirrored()

    def test_induced_judgments_are_transitive(self):
        from prefscale.diagnostics import transitivity_violation_rate

        ratings = [rating("r", f"i{k}", 1 + k % 5) for k in range(8)]
        out = induce_pairwise_from_ratings(ratings, all_pairs([r.image for r in ratings]))
        assert transitivity_violation_rate(out) == 0.0


class TestGraphStats:
    def test_complete_k4(self):
        graph = ComparisonGraph.from_pairs(all_pairs(["a", "b", "c", "d"]))
        assert graph_stats(graph) == (1, 1.0)

    def test_path_three_nodes(self):
        graph = ComparisonGraph.from_pairs([("a", "b"), ("b", "c")])
        diameter, avg = graph_stats(graph)
        assert diameter == 2
        assert avg == pytest.approx(4 / 3)

    def test_star_four_leaves(self):
        graph = ComparisonGraph.from_pairs([("hub", leaf) for leaf in "abcd"])
        diameter, avg = graph_stats(graph)
        assert diameter == 2
        assert avg == pytest.approx(1.6)

    def test_disconnected_reports_component_count(self):
        graph = ComparisonGraph.from_pairs([("a", "b"), ("c", "d")])
        with pytest.raises(ValidationError, match="2 components"):
            graph_stats(graph)

    def test_diameter_at_least_one(self):
        graph = ComparisonGraph.from_pairs([("a", "b")])
        diameter, _ = graph_stats(graph)
        assert diameter >= 1


class TestCanonicalization:
    def test_mirrored_judgment_canonicalizes(self):
        j = PairJudgment(rater="r", a="z", b="a", dimension="overall", outcome=Outcome.A_WINS)
        c = j.canonical()
        assert (c.a, c.b) == ("a", "z")
        assert c.outcome is Outcome.B_WINS

    def test_json_round_trip(self):
        j = PairJudgment(
            rater="r", a="a", b="z", dimension="mood", outcome=Outcome.TIE,
            timestamp_ms=123, is_repeat=True,
        )
        assert judgment_from_json(judgment_to_json(j)) == j


class TestPairBudgetSampler:
    def test_respects_budget_and_connectivity(self):
        images = [f"img{i:02d}" for i in range(50)]
        pairs = sample_pair_budget(images, 612, seed=1)
        assert len(pairs) == 612
        graph = ComparisonGraph.from_pairs(pairs, nodes=images)
        assert graph.is_connected()
        diameter, _ = graph_stats(graph)
        assert diameter <= 2

    def test_impossible_budget_rejected(self):
        with pytest.raises(ValidationError):
            sample_pair_budget(["a", "b", "c"], 1, seed=0)  # cannot connect 3 nodes


class TestAnchors:
    def test_select_anchors_levels_and_agreement(self):
        ratings = []
        # images pinned at levels 2, 3, 4 with unanimous raters, plus noise images
        for level, image in [(2, "lo"), (3, "mid"), (4, "hi")]:
            for rater in ("r1", "r2", "r3"):
                ratings.append(rating(rater, image, level))
        for rater, score in [("r1", 1), ("r2", 3), ("r3", 5)]:
            ratings.append(rating(rater, "noisy", score))
        anchors = select_anchors(ratings, per_level=1)
        (entries,) = anchors.entries.values()
        # the high-variance level-3 candidate loses to the unanimous one
        assert {e.image for e in entries} == {"lo", "mid", "hi"}
        assert {e.level for e in entries} == {2, 3, 4}

    def test_anchor_json_round_trip(self):
        ratings = [
            rating(r, img, lvl)
            for lvl, img in [(2, "lo"), (3, "mid"), (4, "hi")]
            for r in ("r1", "r2")
        ]
        anchors = select_anchors(ratings)
        restored = anchors_from_json(anchors_to_json(anchors))
        assert restored == anchors
