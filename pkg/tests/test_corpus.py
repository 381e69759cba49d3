from __future__ import annotations

import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from nerscope.corpus import (
    OUTSIDE,
    AlignmentError,
    BadTag,
    ColumnSpec,
    EmptyCorpus,
    RaggedRow,
    Tag,
    UnknownSystem,
    attach_predictions,
    decode_spans,
    encode_spans,
    extract_spans,
    parse_conll,
)

CATS = ("PER", "LOC", "ORG", "MISC")


def reference_decode(tags, scheme="BIO"):
    """Deliberately naive decoder: walk left to right keeping a single open span."""
    out = []
    open_span = None  # [start, category]
    for i, t in enumerate(tags):
        s = str(t)
        if s == "O":
            if open_span:
                out.append((open_span[0], i, open_span[1]))
            open_span = None
            continue
        p, c = s.split("-", 1)
        continues = open_span is not None and open_span[1] == c and p in ("I", "E")
        if not continues:
            if open_span:
                out.append((open_span[0], i, open_span[1]))
            open_span = [i, c]
        if scheme == "BIOES" and p in ("S", "E"):
            out.append((open_span[0], i + 1, open_span[1]))
            open_span = None
    if open_span:
        out.append((open_span[0], len(tags), open_span[1]))
    return out


def random_tags(rng, n, scheme="BIO"):
    prefixes = "BI" if scheme == "BIO" else "BIES"
    out = []
    for _ in range(n):
        if rng.random() < 0.4:
            out.append(OUTSIDE)
        else:
            out.append(Tag(rng.choice(prefixes), rng.choice(CATS)))
    return out


def test_tag_parse_and_str():
    assert Tag.parse("B-PER", "BIO") == Tag("B", "PER")
    assert str(Tag.parse("I-MISC", "BIO")) == "I-MISC"
    assert Tag.parse("O") is OUTSIDE
    assert Tag.parse("B-I-X", "BIO").category == "I-X"


@pytest.mark.parametrize("bad,scheme", [("S-PER", "BIO"), ("E-LOC", "BIO"), ("X-PER", "BIOES"),
                                        ("B", "BIO"), ("B-", "BIO"), ("PER", "BIO"), ("O-PER", "BIO")])
def test_tag_parse_rejects(bad, scheme):
    with pytest.raises(BadTag):
        Tag.parse(bad, scheme)


def test_decode_well_formed_bio():
    tags = [Tag.parse(t, "BIO") for t in "B-PER I-PER O B-LOC B-LOC I-LOC O".split()]
    assert decode_spans(tags) == [(0, 2, "PER"), (3, 4, "LOC"), (4, 6, "LOC")]


def test_decode_repairs_orphan_inside():
    tags = [Tag.parse(t, "BIO") for t in "I-PER I-PER O I-LOC B-ORG I-LOC".split()]
    assert decode_spans(tags) == [(0, 2, "PER"), (3, 4, "LOC"), (4, 5, "ORG"), (5, 6, "LOC")]


def test_decode_bioes():
    tags = [Tag.parse(t, "BIOES") for t in "S-PER B-LOC I-LOC E-LOC E-ORG O B-MISC".split()]
    assert decode_spans(tags, "BIOES") == [(0, 1, "PER"), (1, 4, "LOC"), (4, 5, "ORG"), (6, 7, "MISC")]


@given(st.lists(st.tuples(st.integers(1, 4), st.integers(0, 3), st.sampled_from(CATS)), max_size=8),
       st.sampled_from(["BIO", "BIOES"]))
def test_encode_decode_round_trip(pieces, scheme):
    spans, pos = [], 0
    for length, gap, cat in pieces:
        pos += gap
        spans.append((pos, pos + length, cat))
        pos += length
    assert decode_spans(encode_spans(spans, pos + 1, scheme), scheme) == spans


@given(st.integers(0, 10_000), st.sampled_from(["BIO", "BIOES"]))
def test_decode_matches_reference(seed, scheme):
    rng = random.Random(seed)
    tags = random_tags(rng, rng.randint(0, 40), scheme)
    assert decode_spans(tags, scheme) == reference_decode(tags, scheme)


@given(st.integers(0, 10_000))
def test_decoded_spans_disjoint_and_ordered(seed):
    rng = random.Random(seed)
    tags = random_tags(rng, 30)
    spans = decode_spans(tags)
    for (s1, e1, _), (s2, e2, _) in zip(spans, spans[1:]):
        assert s1 < e1 <= s2 < e2
    # every non-O token is covered by exactly one span
    covered = sorted(i for s, e, _ in spans for i in range(s, e))
    assert covered == [i for i, t in enumerate(tags) if t != OUTSIDE]


TEXT = """-DOCSTART- -X- O O

John\tB-PER\tB-PER
Smith  I-PER\tO
lives\tO\tO

Paris B-LOC B-ORG
"""


def test_parse_conll_mixed_whitespace_and_docstart():
    c = parse_conll(TEXT, ColumnSpec(0, 1, (("a", 2),)))
    assert len(c) == 2 and c.n_tokens == 4
    assert c.systems == ("a",)
    assert [s.index for s in c.sentences] == [0, 1]
    assert c.sentences[0].surfaces == ("John", "Smith", "lives")
    gold = extract_spans(c)
    assert [(s.sentence_index, s.start, s.end, s.label, s.surface) for s in gold] == [
        (0, 0, 2, "PER", "John Smith"), (1, 0, 1, "LOC", "Paris")]
    pred = extract_spans(c, "a")
    assert [s.key for s in pred] == [(0, 0, 1, "PER"), (1, 0, 1, "ORG")]


def test_parse_crlf():
    c = parse_conll("a B-PER\r\nb O\r\n\r\nc O\r\n")
    assert len(c) == 2 and c.sentences[0].tokens[0].gold == Tag("B", "PER")


def test_parse_errors():
    with pytest.raises(RaggedRow):
        parse_conll("a B-PER O\nb\n", ColumnSpec(0, 1, (("s", 2),)))
    with pytest.raises(BadTag, match="line 2"):
        parse_conll("a O\nb Q-PER\n")
    with pytest.raises(EmptyCorpus):
        parse_conll("\n\n-DOCSTART- O\n")
    with pytest.raises(ValueError):
        ColumnSpec(0, 0)


def test_unknown_system():
    c = parse_conll("a O\n")
    with pytest.raises(UnknownSystem):
        extract_spans(c, "nope")


def test_attach_predictions_and_alignment():
    test = parse_conll("a B-PER\nb O\n\nc B-LOC\n")
    pred = parse_conll("a B-PER\nb B-ORG\n\nc O\n")
    both = attach_predictions(test, "s", pred)
    assert both.systems == ("s",)
    assert [s.key for s in extract_spans(both, "s")] == [(0, 0, 1, "PER"), (0, 1, 2, "ORG")]
    with pytest.raises(AlignmentError):
        attach_predictions(test, "t", parse_conll("a O\nb O\n"))
    with pytest.raises(AlignmentError):
        attach_predictions(test, "t", parse_conll("a O\nX O\n\nc O\n"))
    with pytest.raises(AlignmentError):
        attach_predictions(test, "t", parse_conll("a O\n\nb O\n\nc O\n"))


def test_select_systems_reorders():
    c = parse_conll("a O B-PER B-LOC\n", ColumnSpec(0, 1, (("x", 2), ("y", 3))))
    r = c.select_systems(["y", "x"])
    assert r.systems == ("y", "x")
    assert r.sentences[0].tokens[0].predictions == (Tag("B", "LOC"), Tag("B", "PER"))
