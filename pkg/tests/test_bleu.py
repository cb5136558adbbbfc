import pytest

from lexipivot.caption import bleu4
from lexipivot.errors import InputError


def test_perfect_match_scores_100():
    cand = [["a", "cat", "sat", "on", "a", "mat"]]
    assert abs(bleu4(cand, [cand[0:1]]) - 100.0) < 1e-9


def test_disjoint_unigrams_score_0():
    assert bleu4([["x", "y", "z", "w"]], [[["a", "b", "c", "d"]]]) == 0.0


def test_two_sentence_fixture_hand_computed():
    # candidate 1 vs its reference:   7/7 1-grams, 6/6 2-grams, 5/5 3-grams, 4/4 4-grams
    # candidate 2 vs its reference:   6/7, 5/6, 4/5, 3/4 ("home" never matches "here")
    # pooled precisions: 13/14, 11/12, 9/10, 7/8
    # candidate length 14, closest-reference length 15 -> BP = exp(1 - 15/14)
    cands = [
        "the black cat sat on the mat".split(),
        "a dog ran far away from home".split(),
    ]
    refs = [
        ["the black cat sat on the mat quietly".split()],
        ["a dog ran far away from here".split()],
    ]
    assert abs(bleu4(cands, refs) - 84.24580706361512) < 1e-9


def test_clipping_counts_against_best_reference():
    # "the the the" has 3 unigrams but the reference only supplies one "the";
    # higher n-grams are absent so the score is 0 without smoothing
    assert bleu4([["the", "the", "the"]], [[["the", "cat"]]]) == 0.0


def test_multiple_references_take_max_count():
    cand = [["a", "b", "a", "b", "a", "b"]]
    refs = [[["a", "b", "a", "b", "a", "b"], ["c", "d"]]]
    assert abs(bleu4(cand, refs) - 100.0) < 1e-9


def test_brevity_penalty_direction():
    # identical except the candidate is shorter than the reference
    long_ref = "a b c d e f g h".split()
    short_cand = "a b c d e f".split()
    shorter = bleu4([short_cand], [[long_ref]])
    exact = bleu4([long_ref], [[long_ref]])
    assert shorter < exact


def test_closest_reference_length_ties_prefer_shorter():
    cand = ["a", "b", "c", "d", "e"]
    refs = [["a", "b", "c", "d"], ["a", "b", "c", "d", "e", "f"]]  # both 1 away
    # every n-gram matches via the longer reference; the tie rule picks the
    # shorter length (r=4 <= c=5) so no brevity penalty applies
    assert abs(bleu4([cand], [refs]) - 100.0) < 1e-9


def test_token_type_agnostic():
    ints = bleu4([[1, 2, 3, 4, 5]], [[[1, 2, 3, 4, 6]]])
    strs = bleu4([["1", "2", "3", "4", "5"]], [[["1", "2", "3", "4", "6"]]])
    assert abs(ints - strs) < 1e-12


def test_empty_corpus_rejected():
    with pytest.raises(InputError):
        bleu4([], [])
    with pytest.raises(InputError):
        bleu4([["a"]], [[]])
