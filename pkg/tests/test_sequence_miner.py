from collections import Counter

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mimir.errors import EmptyWindow, InvalidN, InvalidParams, UnknownState
from mimir.models import TokenSequence
from mimir.semantic_filter import apply, default_rules
from mimir.sequence_miner import (NGramTable, PhaseLabel, build_markov, classify_phase, count_ngrams, mine,
                                  phase_timeline, predict_next, top_ngrams, transition_prob)
from mimir.tokenizer import read_tokens, tokenize
from mimir.util import format_percent

GG = ("GENERATION_image", "GENERATION_image")


def seq(*texts):
    return read_tokens("\n".join(texts), "s")


@pytest.fixture(scope="module")
def pilot_tokens(pilot_short):
    session, _ = pilot_short
    moves, _ = apply(session, default_rules())
    return tokenize(moves)


@pytest.mark.parametrize("fraction,text", [
    (37 / 194, "19.1%"),
    (16 / 23, "69.6%"),
    (37 / 56, "66.1%"),
    (1 / 16, "6.3%"),
    (1.0, "100.0%"),
    (0, "0.0%"),
])
def test_format_percent(fraction, text):
    assert format_percent(fraction) == text


def test_pilot_bigrams(pilot_tokens):
    assert len(pilot_tokens) == 195
    table = count_ngrams(pilot_tokens, 2)
    assert table.total == 194
    (gram, count, share), *_ = top_ngrams(table, 5)
    assert (gram, count) == (GG, 37)
    assert format_percent(share) == "19.1%"


def test_pilot_transitions(pilot_tokens):
    model = build_markov(pilot_tokens)
    assert model.transition_counts[("INSERT_image", "MODIFY_image")] == 16
    assert model.outgoing("INSERT_image") == 23
    assert model.outgoing("GENERATION_image") == 56
    assert transition_prob(model, "INSERT_image", "MODIFY_image") == 16 / 23
    assert transition_prob(model, *GG) == 37 / 56
    assert format_percent(transition_prob(model, "INSERT_image", "MODIFY_image")) == "69.6%"
    assert format_percent(transition_prob(model, *GG)) == "66.1%"


def test_ngrams_do_not_cross_sequences():
    table = count_ngrams([seq("INSERT_a", "MODIFY_a"), seq("GENERATION_a", "REMOVE_a")], 2)
    assert table.counts == {("GENERATION_a", "REMOVE_a"): 1, ("INSERT_a", "MODIFY_a"): 1}


def test_top_ngrams_breaks_ties_lexicographically():
    table = NGramTable(2, {("B", "A"): 3, ("A", "B"): 3})
    assert top_ngrams(table, 1) == [(("A", "B"), 3, 0.5)]
    assert [g for g, _, _ in top_ngrams(table, 2)] == [("A", "B"), ("B", "A")]


@given(st.dictionaries(st.tuples(st.sampled_from("ABC"), st.sampled_from("ABC")), st.integers(1, 9), min_size=1),
       st.integers(1, 10))
def test_top_ngrams_ordering(counts, k):
    ranked = top_ngrams(NGramTable(2, counts), k)
    assert len(ranked) == min(k, len(counts))
    keys = [(-count, gram) for gram, count, _ in ranked]
    assert keys == sorted(keys)
    assert all(share == count / sum(counts.values()) for _, count, share in ranked)
    cutoff = keys[-1]
    assert all((-c, g) >= cutoff for g, c in counts.items() if g not in {gram for gram, _, _ in ranked})


def test_short_sequences():
    assert count_ngrams(seq("INSERT_a"), 2).counts == {}
    assert top_ngrams(count_ngrams(seq(), 2), 3) == []
    assert build_markov(seq()).states == ()


def test_invalid_arguments():
    with pytest.raises(InvalidN):
        count_ngrams(seq("INSERT_a"), 0)
    with pytest.raises(InvalidParams):
        top_ngrams(count_ngrams(seq("INSERT_a"), 1), 0)
    with pytest.raises(UnknownState):
        transition_prob(build_markov(seq("INSERT_a")), "MODIFY_a", "INSERT_a")


def test_sink_state_has_no_successors():
    model = build_markov(seq("INSERT_a", "REMOVE_a"))
    assert transition_prob(model, "REMOVE_a", "INSERT_a") == 0.0
    assert predict_next(model, "REMOVE_a") == []


def test_predict_next_tie_break():
    model = build_markov(seq("INSERT_a", "REMOVE_a", "INSERT_a", "MODIFY_a"))
    assert predict_next(model, "INSERT_a") == [("MODIFY_a", 0.5), ("REMOVE_a", 0.5)]


@pytest.mark.parametrize("window,phase", [
    (["MODIFY_image", "MODIFY_prompt", "GENERATION_image", "GENERATION_image"], PhaseLabel.SETUP),
    (["GENERATION_image", "GENERATION_video", "INSERT_image"], PhaseLabel.EXPLORATION),
    (["INSERT_image", "REMOVE_image", "GENERATION_image"], PhaseLabel.MIXED),
])
def test_classify_phase(window, phase):
    assert classify_phase(window) == phase


def test_classify_phase_errors():
    with pytest.raises(EmptyWindow):
        classify_phase([])
    with pytest.raises(InvalidParams):
        classify_phase(["INSERT_a"], theta_setup=0)


def test_phase_timeline():
    timeline = phase_timeline(seq("MODIFY_a", "MODIFY_a", "GENERATION_a", "GENERATION_a", "GENERATION_a"), window=2)
    assert timeline == [
        (0, 2, PhaseLabel.SETUP),
        (2, 4, PhaseLabel.EXPLORATION),
        (4, 5, PhaseLabel.EXPLORATION),
    ]


def test_mine_always_has_bigrams():
    result = mine(seq("INSERT_a", "MODIFY_a", "GENERATION_a"), orders=(3,), top_k=2)
    assert sorted(result.tables) == [2, 3]
    assert result.bigrams.total == 2
    assert len(result.top[3]) == 1


tokens = st.lists(st.sampled_from(["INSERT_a", "MODIFY_a", "MODIFY_b", "GENERATION_a", "GENERATION_b", "REMOVE_a"]),
                  max_size=50)


@given(tokens, st.integers(1, 4))
def test_ngram_counts_match_enumeration(texts, n):
    expected = Counter()
    for i in range(len(texts)):
        if i + n <= len(texts):
            expected[tuple(texts[i:i + n])] += 1
    assert count_ngrams(seq(*texts), n).counts == dict(expected)


@given(tokens)
def test_transitions_match_enumeration(texts):
    model = build_markov(seq(*texts))
    pairs = Counter(zip(texts, texts[1:]))
    assert model.transition_counts == dict(pairs)
    for (a, b), count in pairs.items():
        outgoing = sum(c for (x, _), c in pairs.items() if x == a)
        assert model.transition_probs[(a, b)] == count / outgoing


@given(tokens)
def test_rows_sum_to_one(texts):
    model = build_markov(seq(*texts))
    for state in model.states:
        row = [p for (a, _), p in model.transition_probs.items() if a == state]
        if row:
            assert abs(sum(row) - 1) <= 1e-9


def test_token_sequence_input():
    assert count_ngrams(TokenSequence("s", ()), 2).total == 0
