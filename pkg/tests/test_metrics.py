from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import lcs_brute, lev_recursive
from xqa_eval.errors import DataValidationError
from xqa_eval.metrics import (
    CorpusScores,
    GoldAnswerSet,
    ScoreVector,
    WeightVector,
    aggregate,
    exact_match,
    lcs_length,
    levenshtein_distance,
    levenshtein_similarity,
    rouge_l,
    score_instance,
    token_f1,
    weighted_average,
)


def gold(*answers: str) -> GoldAnswerSet:
    return GoldAnswerSet.from_answers("q", answers)


class TestGoldAnswerSet:
    def test_from_answers_drops_normalized_duplicates(self):
        gs = GoldAnswerSet.from_answers("q1", ["Weiße Pille", "weiße pille.", "rund"])
        assert gs.answers == ("Weiße Pille", "rund")
        assert len(gs) == 2

    def test_empty_set_rejected(self):
        with pytest.raises(DataValidationError):
            GoldAnswerSet("q1", ())

    def test_direct_duplicates_rejected(self):
        with pytest.raises(DataValidationError):
            GoldAnswerSet("q1", ("a", "A."))


class TestScoreVector:
    def test_em_restricted_to_binary(self):
        with pytest.raises(DataValidationError):
            ScoreVector(em=2, lev=0.5, f1=0.5, rouge_l=0.5)

    def test_fractions_bounded(self):
        with pytest.raises(DataValidationError):
            ScoreVector(em=0, lev=1.5, f1=0.5, rouge_l=0.5)
        with pytest.raises(DataValidationError):
            ScoreVector(em=0, lev=0.5, f1=-0.1, rouge_l=0.5)

    def test_as_tuple_order(self):
        v = ScoreVector(em=1, lev=0.9, f1=0.8, rouge_l=0.7)
        assert v.as_tuple() == (1.0, 0.9, 0.8, 0.7)


class TestExactMatch:
    def test_identity(self):
        assert exact_match("Metoprololtartrat", gold("Metoprololtartrat")) == 1

    def test_normalization_forces_equality(self):
        assert exact_match("metoprololtartrat.", gold("Metoprololtartrat")) == 1

    def test_differing_strings(self):
        assert exact_match("Metoprolol", gold("Metoprololtartrat")) == 0

    def test_any_reference_suffices(self):
        assert exact_match("rund", gold("eckig", "rund")) == 1


class TestLevenshteinDistance:
    def test_kitten_sitting(self):
        assert levenshtein_distance("kitten", "sitting") == 3
        assert lev_recursive("kitten", "sitting") == 3

    def test_equal_strings(self):
        assert levenshtein_distance("abc", "abc") == 0

    def test_insertions_from_empty(self):
        assert levenshtein_distance("", "abc") == 3


class TestLevenshteinSimilarity:
    def test_one_substitution_in_three(self):
        assert levenshtein_similarity("abc", gold("abd")) == pytest.approx(2 / 3, abs=1e-9)

    def test_identity(self):
        assert levenshtein_similarity("abc", gold("abc")) == 1.0

    def test_fully_different(self):
        assert levenshtein_similarity("xyz", gold("abc")) == 0.0

    def test_both_empty_after_normalization(self):
        assert levenshtein_similarity("...", gold("!!")) == 1.0

    def test_best_reference_wins(self):
        assert levenshtein_similarity("abc", gold("xyz", "abc")) == 1.0


class TestTokenF1:
    def test_partial_overlap(self):
        assert token_f1("white round pills", gold("white pills")) == pytest.approx(0.8, abs=1e-9)

    def test_mean_over_references(self):
        value = token_f1("white round pills", gold("white pills", "white round pills"))
        assert value == pytest.approx(0.9, abs=1e-9)

    def test_disjoint_sets(self):
        assert token_f1("blue", gold("white pills")) == 0.0

    def test_both_empty_after_normalization(self):
        assert token_f1("?!", gold(".")) == 1.0

    def test_repeated_words_count_once(self):
        # {die, pille} vs {die, pille}; repetition does not change the sets
        assert token_f1("die die Pille", gold("die Pille Pille")) == 1.0


class TestRougeL:
    def test_subsequence_overlap(self):
        # LCS("a c d", "a b c d") = 3: P = 1, R = 3/4, F = 6/7
        assert rouge_l("a c d", gold("a b c d")) == pytest.approx(6 / 7, abs=1e-9)

    def test_identical_sequences(self):
        assert rouge_l("weiße runde Tablette", gold("weiße runde Tablette")) == 1.0

    def test_disjoint_tokens(self):
        assert rouge_l("x y", gold("a b")) == 0.0

    def test_lcs_brute_agreement(self):
        assert lcs_length(["a", "c", "d"], ["a", "b", "c", "d"]) == 3
        assert lcs_brute(["a", "c", "d"], ["a", "b", "c", "d"]) == 3

    def test_order_matters(self):
        # same word sets but reversed order: LCS = 1
        value = rouge_l("a b c", gold("c b a"))
        assert value == pytest.approx(1 / 3, abs=1e-9)


class TestScoreInstance:
    def test_identity(self):
        assert score_instance("Manfred Bauer", gold("Manfred Bauer")) == ScoreVector(1, 1.0, 1.0, 1.0)

    def test_partial_overlap_values_from_oracles(self):
        dist = lev_recursive("white round pills", "white pills")
        expected_lev = 1 - dist / len("white round pills")
        vector = score_instance("white round pills", gold("white pills"))
        assert vector.em == 0
        assert vector.lev == pytest.approx(expected_lev, abs=1e-9)
        assert vector.f1 == pytest.approx(0.8, abs=1e-9)
        assert vector.rouge_l == pytest.approx(0.8, abs=1e-9)

    def test_empty_prediction(self):
        assert score_instance("", gold("x")) == ScoreVector(0, 0.0, 0.0, 0.0)

    def test_raw_mode_skips_normalization_except_em(self):
        vector = score_instance("Weiße", gold("weiße"), normalized=False)
        assert vector.em == 1
        assert vector.lev == pytest.approx(1 - 1 / 5)
        assert vector.f1 == 0.0
        assert vector.rouge_l == 0.0


class TestWeightedAverage:
    scores = ScoreVector(em=1, lev=0.6, f1=0.4, rouge_l=0.2)

    def test_uniform_weights_give_mean(self):
        v = ScoreVector(em=0, lev=0.6, f1=0.4, rouge_l=0.2)
        w = WeightVector(1, 1, 1, 1)
        combined = weighted_average(ScoreVector(1, 0.6, 0.4, 0.2), w)
        assert combined == pytest.approx((1 + 0.6 + 0.4 + 0.2) / 4)
        assert weighted_average(v, w) == pytest.approx(0.3)

    def test_reference_values(self):
        # corpus-level inputs may have a fractional em mean
        s = (0.8, 0.6, 0.4, 0.2)
        assert weighted_average(s, WeightVector(1, 1, 1, 1)) == pytest.approx(0.5)
        assert weighted_average(s, WeightVector(2, 2, 2, 2)) == pytest.approx(0.5)
        assert weighted_average(s, WeightVector(1, 0, 0, 0)) == pytest.approx(0.8)
        assert weighted_average(s, WeightVector(0, 1, 0, 0)) == pytest.approx(0.6)

    def test_corpus_scores_accepted(self):
        corpus = CorpusScores(em=0.8, lev=0.6, f1=0.4, rouge_l=0.2, question_count=5)
        assert weighted_average(corpus, WeightVector(1, 1, 1, 1)) == pytest.approx(0.5)

    def test_wrong_arity_rejected(self):
        with pytest.raises(ValueError):
            weighted_average((0.8, 0.6), WeightVector(1, 1, 1, 1))

    def test_negative_weights_allowed_no_clamping(self):
        s = ScoreVector(1, 0.0, 0.0, 0.0)
        # (-1*1 + 2*0) / (-1 + 2) = -1; the result is not clamped to [0, 1]
        assert weighted_average(s, WeightVector(-1, 0, 0, 2)) == pytest.approx(-1.0)
        s2 = ScoreVector(1, 1.0, 0.0, 0.0)
        assert weighted_average(s2, WeightVector(-1, 2, 0, 0)) == pytest.approx(1.0)

    def test_zero_weights_rejected(self):
        with pytest.raises(ValueError, match="degenerate weights"):
            weighted_average(self.scores, WeightVector(0, 0, 0, 0))

    def test_cancelling_weights_rejected(self):
        with pytest.raises(ValueError, match="degenerate weights"):
            weighted_average(self.scores, WeightVector(-1, 1, 0, 0))

    def test_intercept_not_part_of_the_average(self):
        s = ScoreVector(1, 1.0, 1.0, 1.0)
        with_intercept = WeightVector(1, 1, 1, 1, intercept=5.0)
        assert weighted_average(s, with_intercept) == pytest.approx(1.0)


class TestAggregate:
    def test_mean_of_two(self):
        result = aggregate([ScoreVector(1, 1, 1, 1), ScoreVector(0, 0, 0, 0)])
        assert result == CorpusScores(0.5, 0.5, 0.5, 0.5, question_count=2)

    def test_single_element(self):
        v = ScoreVector(1, 0.9, 0.8, 0.7)
        result = aggregate([v])
        assert (result.em, result.lev, result.f1, result.rouge_l) == v.as_tuple()
        assert result.question_count == 1

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            aggregate([])


# property tests

plain_text = st.text(max_size=20)
short_text = st.text(
    alphabet=st.sampled_from("ab α"),
    max_size=6,
)


@settings(max_examples=200)
@given(pred=plain_text, answer=plain_text)
def test_metric_ranges(pred, answer):
    gs = gold(answer)
    assert exact_match(pred, gs) in (0, 1)
    for metric in (levenshtein_similarity, token_f1, rouge_l):
        value = metric(pred, gs)
        assert 0.0 <= value <= 1.0


@settings(max_examples=200)
@given(text=plain_text)
def test_single_reference_dominance(text):
    vector = score_instance(text, gold(text))
    assert vector == ScoreVector(1, 1.0, 1.0, 1.0)


@settings(max_examples=200)
@given(a=short_text, b=short_text, c=short_text)
def test_distance_is_a_metric(a, b, c):
    assert levenshtein_distance(a, b) == levenshtein_distance(b, a)
    assert (levenshtein_distance(a, b) == 0) == (a == b)
    assert levenshtein_distance(a, c) <= levenshtein_distance(a, b) + levenshtein_distance(b, c)


@settings(max_examples=100)
@given(a=short_text, b=short_text)
def test_distance_matches_recursive_oracle(a, b):
    assert levenshtein_distance(a, b) == lev_recursive(a, b)


@settings(max_examples=200)
@given(pred=plain_text, answer=plain_text)
def test_single_reference_symmetry(pred, answer):
    assert token_f1(pred, gold(answer)) == pytest.approx(token_f1(answer, gold(pred)))
    assert rouge_l(pred, gold(answer)) == pytest.approx(rouge_l(answer, gold(pred)))


@settings(max_examples=200)
@given(
    weights=st.lists(st.floats(-3, 3), min_size=4, max_size=4),
    scale=st.floats(min_value=0.01, max_value=100.0),
    values=st.lists(st.floats(0, 1), min_size=3, max_size=3),
)
def test_weighted_average_scale_invariance(weights, scale, values):
    base = WeightVector(*weights)
    if abs(sum(base.metric_weights())) < 1e-6:
        return
    scores = ScoreVector(1, *values)
    scaled = WeightVector(*(w * scale for w in weights))
    assert weighted_average(scores, scaled) == pytest.approx(
        weighted_average(scores, base), rel=1e-9, abs=1e-12
    )


@settings(max_examples=100)
@given(
    k=st.integers(min_value=1, max_value=12),
    values=st.lists(st.floats(0, 1), min_size=3, max_size=3),
    em=st.integers(min_value=0, max_value=1),
)
def test_aggregate_of_copies_is_identity(k, values, em):
    v = ScoreVector(em, *values)
    result = aggregate([v] * k)
    for got, want in zip(
        (result.em, result.lev, result.f1, result.rouge_l), v.as_tuple()
    ):
        assert math.isclose(got, want, rel_tol=1e-12, abs_tol=1e-12)
    assert result.question_count == k
