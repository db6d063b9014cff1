import math

import pytest
from hypothesis import given, strategies as st

import oracles
from hotscore.evalharness import (
    RankingTask, best_rank, bleu, corpus_bleu, evaluate, lcs_length, mean_rank, mrr, recall_at_k, rouge_l,
    tokenize,
)


def test_tokenize_mixed():
    assert tokenize("西湖 sunset, it's 好!") == ["西", "湖", "sunset", "it's", "好"]
    assert tokenize("") == []


def test_best_rank_ties_keep_input_order():
    t = RankingTask(("a", "b", "c"), frozenset({2}), (1.0, 2.0, 2.0))
    assert best_rank(t) == 2
    with pytest.raises(ValueError):
        RankingTask(("a",), frozenset(), (1.0,))
    with pytest.raises(ValueError):
        mrr([])


tasks_st = st.lists(st.floats(0, 3), min_size=1, max_size=15).flatmap(
    lambda s: st.tuples(st.just(s), st.sets(st.integers(0, len(s) - 1), min_size=1)))


@given(st.lists(tasks_st, min_size=1, max_size=10))
def test_ranking_metrics_vs_scan(raw):
    tasks = [RankingTask(tuple(map(str, range(len(s)))), frozenset(r), tuple(s)) for s, r in raw]
    ranks = [oracles.best_rank_scan(s, r) for s, r in raw]
    assert [best_rank(t) for t in tasks] == ranks
    assert mean_rank(tasks) == pytest.approx(sum(ranks) / len(ranks))
    assert mrr(tasks) == pytest.approx(sum(1 / r for r in ranks) / len(ranks))
    r1, r5, r10 = (recall_at_k(tasks, k) for k in (1, 5, 10))
    assert r1 <= r5 <= r10
    assert 1 / mean_rank(tasks) <= mrr(tasks) + 1e-12  # harmonic <= arithmetic


def test_bleu_properties():
    assert bleu("今天天气很好", ["今天天气很好"]) == pytest.approx(1.0)
    assert bleu("", ["x"]) == 0.0
    assert bleu("abc xyz", ["def"], smooth=False) == 0.0
    with pytest.raises(ValueError):
        bleu("a", [])
    # clipped counts take the max over references
    assert bleu("the the", ["the cat", "the the dog"]) == pytest.approx(math.exp(1 - 2 / 2) * 1.0)


def test_bleu_brevity_uses_closest_reference():
    # refs of length 2 and 6 around a 3-token candidate: closest is 2, so no penalty
    assert bleu("a b c", ["a b", "a b c d e f"]) == pytest.approx(1.0)
    # closest is 3 tokens for a 2-token candidate: BP = exp(1 - 3/2), p1 = p2 = 1
    assert bleu("a b", ["a b c", "a b c d e f g"]) == pytest.approx(math.exp(-0.5))


def test_corpus_bleu_single_equals_sentence():
    assert corpus_bleu(["今天天气好"], [["今天天气很好"]]) == pytest.approx(bleu("今天天气好", ["今天天气很好"]))


@given(st.lists(st.sampled_from("abcd"), max_size=12), st.lists(st.sampled_from("abcd"), max_size=12))
def test_lcs_vs_recursive(a, b):
    assert lcs_length(a, b) == oracles.lcs_recursive(tuple(a), tuple(b))


def test_rouge_l_bounds_and_multi_reference():
    assert rouge_l("好吃", "好吃") == pytest.approx(1.0)
    assert rouge_l("abc", "xyz") == 0.0
    assert rouge_l("a b", ["x y", "a b"]) == pytest.approx(1.0)


def test_evaluate_rows():
    rows = [{"scores": [0.1, 0.9], "relevant": [1]},
            {"scores": [0.9, 0.1, 0.5], "relevant": [2]},
            {"hypothesis": "好吃", "references": ["好吃"]}]
    out = evaluate(rows)
    assert out["r@1"] == 0.5 and out["mr"] == 1.5 and out["mrr"] == 0.75
    assert out["bleu"] == pytest.approx(1.0) and out["rouge_l"] == pytest.approx(1.0)
    assert evaluate([], ["mrr"])["mrr"] is None
    with pytest.raises(ValueError):
        evaluate(rows, ["nope"])
