from __future__ import annotations

import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nerscope.attributes import (
    ATTRIBUTES,
    Featurizer,
    TrainingStats,
    build_training_stats,
    check_attributes,
    phi_eLen,
    token_labels,
)
from nerscope.corpus import Corpus, Sentence, Span, Tag, Token, encode_spans, extract_spans

# Hand-computed values for gold spans of the bundled worked fixture.
# Training side: 18 entities, 68 tokens.  "New York" is LOC twice and ORG once;
# "Apple" occurs twice as a token (once ORG, once outside any entity).
# Columns: eLen, sLen, eDen, oDen, eCon, eFre, tCon, tFre
HAND = {
    # "Life in New York is fun ."
    (0, 2, 4, "LOC"): (2, 7, 1 / 7, 0.0, 2 / 3, 3 / 18, 2 / 3, 3 / 68),
    # "Mary met Kofi Annan in Paris today ."  (Kofi, Annan unseen)
    (1, 0, 1, "PER"): (1, 8, 3 / 8, 0.25, 1.0, 1 / 18, 1.0, 1 / 68),
    (1, 2, 4, "PER"): (2, 8, 3 / 8, 0.25, 0.0, 0.0, 0.0, 0.0),
    (1, 5, 6, "LOC"): (1, 8, 3 / 8, 0.25, 1.0, 1 / 18, 1.0, 1 / 68),
    # "The Bank of England met the United Nations ."
    (2, 1, 4, "ORG"): (3, 9, 2 / 9, 0.0, 1.0, 1 / 18, 1.0, 1 / 68),
    # "Washington visited Jordan ."
    (3, 0, 1, "PER"): (1, 4, 2 / 4, 0.0, 1 / 2, 2 / 18, 1 / 2, 2 / 68),
    (3, 2, 3, "LOC"): (1, 4, 2 / 4, 0.0, 1 / 2, 2 / 18, 1 / 2, 2 / 68),
    # "New York Stock Exchange Group fell today ."  (Stock, Exchange, Group, fell unseen)
    (4, 0, 5, "ORG"): (5, 8, 1 / 8, 0.5, 0.0, 0.0, (1 / 3 + 1 / 3) / 5, (3 + 3) / 68 / 5),
    # "Apple sued John Smith in London ."
    (5, 0, 1, "ORG"): (1, 7, 3 / 7, 0.0, 1.0, 1 / 18, 1 / 2, 2 / 68),
    (5, 2, 4, "PER"): (2, 7, 3 / 7, 0.0, 1.0, 1 / 18, 1.0, (2 + 1) / 68 / 2),
    # "Google is really fun ."  (really unseen)
    (6, 0, 1, "ORG"): (1, 5, 1 / 5, 0.2, 1.0, 1 / 18, 1.0, 1 / 68),
    # "Berlin and Geneva and Zurich ."  (and, and, Zurich unseen)
    (7, 4, 5, "LOC"): (1, 6, 3 / 6, 0.5, 0.0, 0.0, 0.0, 0.0),
}


def test_training_totals(worked):
    _, _, stats, _ = worked
    assert stats.total_entities == 18
    assert stats.total_tokens == 68
    assert dict(stats.entity_table["New York"]) == {"LOC": 2, "ORG": 1}
    assert dict(stats.token_table["Apple"]) == {"ORG": 1, "O": 1}


@pytest.mark.parametrize("key", sorted(HAND))
def test_hand_computed_values(worked, key):
    _, test, _, feat = worked
    spans = {s.key: s for s in extract_spans(test)}
    span = spans[key]
    for attr, expected in zip(ATTRIBUTES, HAND[key]):
        assert feat.span_value(span, attr) == pytest.approx(expected, abs=1e-12), attr


def test_predicted_span_uses_predicted_label(worked):
    _, test, _, feat = worked
    # sysB tags "New York" in sentence 0 as ORG
    span = next(s for s in extract_spans(test, "sysB") if s.key == (0, 2, 4, "ORG"))
    assert feat.span_value(span, "eCon") == pytest.approx(1 / 3, abs=1e-12)
    assert feat.span_value(span, "tCon") == pytest.approx(1 / 3, abs=1e-12)
    # frequency and sentence-level attributes ignore the label
    assert feat.span_value(span, "eFre") == pytest.approx(3 / 18, abs=1e-12)
    assert feat.span_value(span, "eDen") == pytest.approx(1 / 7, abs=1e-12)


def test_two_token_entity_length():
    span = Span(0, 3, 5, "LOC", "New York")
    assert phi_eLen(span) == 2


def test_token_values(worked):
    _, _, _, feat = worked
    # "Apple" is token 0 of sentence 5, gold ORG
    assert feat.token_value(5, 0, "tCon") == pytest.approx(0.5)
    assert feat.token_value(5, 0, "tCon", label="O") == pytest.approx(0.5)
    assert feat.token_value(5, 1, "tCon") == 1.0  # "sued" is always O
    assert feat.token_value(5, 0, "sLen") == 7
    with pytest.raises(ValueError):
        feat.token_value(5, 0, "eCon")
    assert len(feat.token_items()) == sum(len(s) for s in feat.corpus.sentences)


def test_lowercase_matching():
    sent = Sentence((Token("apple", Tag("B", "ORG")), Token("Apple", Tag("B", "ORG"))), 0)
    train = Corpus((sent,), (), "train")
    stats = build_training_stats(train, lowercase=True)
    assert stats.entity_row("APPLE").total == 2
    assert build_training_stats(train).entity_row("APPLE") is None


def test_stats_round_trip(worked, tmp_path):
    _, _, stats, _ = worked
    path = tmp_path / "stats.json"
    stats.save(path)
    again = TrainingStats.load(path)
    assert again.to_json() == stats.to_json()
    with pytest.raises(ValueError):
        TrainingStats.from_json({"version": 99})


def test_check_attributes():
    assert check_attributes(["eLen", "tFre"]) == ("eLen", "tFre")
    with pytest.raises(ValueError):
        check_attributes(["eLength"])


def test_training_stats_needs_train_role(worked):
    _, test, _, _ = worked
    with pytest.raises(ValueError):
        build_training_stats(test)


# brute-force oracle: recount everything from raw (surface, label) lists

WORDS = ["a", "b", "c", "d", "e"]
CATS = ["PER", "LOC"]


def _random_sentence(rng, index):
    n = rng.randint(1, 8)
    words = [rng.choice(WORDS) for _ in range(n)]
    spans, i = [], 0
    while i < n:
        if rng.random() < 0.4:
            length = min(n - i, rng.randint(1, 3))
            spans.append((i, i + length, rng.choice(CATS)))
            i += length
        i += 1
    gold = encode_spans(spans, n)
    return Sentence(tuple(Token(w, g) for w, g in zip(words, gold)), index), words, spans


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 100_000))
def test_attributes_match_brute_force(seed):
    rng = random.Random(seed)
    train_raw = [_random_sentence(rng, i) for i in range(rng.randint(1, 6))]
    test_raw = [_random_sentence(rng, i) for i in range(rng.randint(1, 4))]
    train = Corpus(tuple(s for s, _, _ in train_raw), (), "train")
    test = Corpus(tuple(s for s, _, _ in test_raw), (), "test")
    feat = Featurizer(test, build_training_stats(train))

    train_entities = [(" ".join(w[a:b]), c) for _, w, sp in train_raw for a, b, c in sp]
    train_tokens = []
    for _, w, sp in train_raw:
        labels = ["O"] * len(w)
        for a, b, c in sp:
            labels[a:b] = [c] * (b - a)
        train_tokens += list(zip(w, labels))
    vocab = {w for w, _ in train_tokens}

    def con(pairs, surface, label):
        hits = [l for s, l in pairs if s == surface]
        return hits.count(label) / len(hits) if hits else 0.0

    def fre(pairs, surface):
        return sum(s == surface for s, _ in pairs) / len(pairs) if pairs else 0.0

    for span in extract_spans(test):
        _, words, spans = test_raw[span.sentence_index]
        toks = words[span.start:span.end]
        expected = {
            "eLen": span.end - span.start,
            "sLen": len(words),
            "eDen": len(spans) / len(words),
            "oDen": sum(w not in vocab for w in words) / len(words),
            "eCon": con(train_entities, span.surface, span.label),
            "eFre": fre(train_entities, span.surface),
            "tCon": sum(con(train_tokens, t, span.label) for t in toks) / len(toks),
            "tFre": sum(fre(train_tokens, t) for t in toks) / len(toks),
        }
        for attr in ATTRIBUTES:
            assert math.isclose(feat.span_value(span, attr), expected[attr], abs_tol=1e-12), attr


@given(st.lists(st.sampled_from(["O", "B-PER", "I-PER", "B-LOC", "I-LOC"]), max_size=15))
def test_token_labels_cover_spans(tags):
    parsed = [Tag.parse(t, "BIO") for t in tags]
    labels = token_labels(parsed)
    assert len(labels) == len(tags)
    assert [l == "O" for l in labels] == [t == "O" for t in tags]
