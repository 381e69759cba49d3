from __future__ import annotations

import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from nerscope.bucketing import BucketPlan, Interval, partition
from nerscope.corpus import ColumnSpec, Span, parse_conll
from nerscope.metrics import PRF, bucket_prf, matched, micro_f1, token_bucket_accuracy

CATS = ("PER", "LOC", "ORG", "MISC")


def random_spans(rng, n_sent=5, max_len=12):
    out = set()
    for s in range(n_sent):
        for _ in range(rng.randint(0, 4)):
            a = rng.randrange(max_len)
            b = rng.randint(a + 1, min(max_len, a + 4))
            out.add(Span(s, a, b, rng.choice(CATS)))
    return sorted(out)


def brute_force_prf(gold, pred):
    tp = 0
    for g in gold:
        for p in pred:
            if (g.sentence_index, g.start, g.end, g.label) == (p.sentence_index, p.start, p.end, p.label):
                tp += 1
                break
    prec = tp / len(pred) if pred else 0.0
    rec = tp / len(gold) if gold else 0.0
    f1 = 0.0 if prec + rec == 0 else 2 * prec * rec / (prec + rec)
    return tp, prec, rec, f1


@given(st.integers(0, 10**6))
def test_micro_f1_matches_brute_force(seed):
    rng = random.Random(seed)
    gold = random_spans(rng)
    pred = random_spans(rng) + rng.sample(gold, k=rng.randint(0, len(gold)))
    pred = sorted(set(pred))
    tp, p, r, f = brute_force_prf(gold, pred)
    got = micro_f1(gold, pred)
    assert got.true_positives == tp
    assert got.precision == pytest.approx(p, abs=1e-12)
    assert got.recall == pytest.approx(r, abs=1e-12)
    assert got.f1 == pytest.approx(f, abs=1e-12)
    assert 0.0 <= got.f1 <= 1.0
    assert (got.f1 == 1.0) == (bool(gold) and set(s.key for s in gold) == set(s.key for s in pred))


def test_exact_match_only():
    gold = [Span(0, 0, 2, "PER")]
    assert micro_f1(gold, [Span(0, 0, 1, "PER")]).f1 == 0.0
    assert micro_f1(gold, [Span(0, 0, 2, "LOC")]).f1 == 0.0
    assert micro_f1(gold, [Span(1, 0, 2, "PER")]).f1 == 0.0
    assert micro_f1(gold, [Span(0, 0, 2, "PER", "other surface")]).f1 == 1.0


def test_empty_sides():
    assert micro_f1([], []).f1 == 0.0
    assert micro_f1([Span(0, 0, 1, "X")], []).recall == 0.0


def test_prf_from_counts():
    c = PRF.from_counts(3, 4, 6)
    assert (c.precision, c.recall) == (0.75, 0.5)
    assert c.f1 == pytest.approx(0.6)
    assert c.as_dict() == {"tp": 3, "n_pred": 4, "n_gold": 6, "precision": 0.75, "recall": 0.5,
                           "f1": pytest.approx(0.6)}


def _one_bucket(n):
    plan = BucketPlan("sLen", (Interval(0, 1000),), ("B1",), "equal-population")
    return partition([1.0] * n, plan)


@given(st.integers(0, 10**6))
def test_single_bucket_equals_micro_f1(seed):
    rng = random.Random(seed)
    gold = random_spans(rng)
    pred = random_spans(rng)
    if not gold:
        gold = [Span(0, 0, 1, "PER")]
    got = bucket_prf(_one_bucket(len(gold)), _one_bucket(len(pred)), gold, pred)
    assert got == [micro_f1(gold, pred)]


def test_bucket_prf_precision_and_recall_sides():
    gold = [Span(0, 0, 1, "A"), Span(0, 2, 5, "A")]
    pred = [Span(0, 0, 1, "A"), Span(0, 2, 4, "A"), Span(0, 6, 9, "A")]
    plan = BucketPlan("eLen", (Interval(1, 2), Interval(2, 3), Interval(3, 10)), ("B1", "B2", "B3"),
                      "fixed-lengths")
    g = partition([float(len(s)) for s in gold], plan)
    p = partition([float(len(s)) for s in pred], plan)
    b1, b2, b3 = bucket_prf(g, p, gold, pred)
    assert (b1.precision, b1.recall, b1.f1) == (1.0, 1.0, 1.0)
    assert b2 is None  # no gold span of length 2; the stray prediction does not create a bucket score
    assert (b3.true_positives, b3.predicted_count, b3.gold_count) == (0, 1, 1)
    assert b3.f1 == 0.0


def test_bucket_with_gold_but_no_predictions():
    gold = [Span(0, 0, 1, "A")]
    plan = BucketPlan("eLen", (Interval(1, 2),), ("B1",), "fixed-lengths")
    (c,) = bucket_prf(partition([1.0], plan), partition([], plan), gold, [])
    assert (c.recall, c.precision, c.f1) == (0.0, 0.0, 0.0)


def test_matched_flags():
    gold = [Span(0, 0, 1, "A"), Span(0, 1, 2, "B")]
    pred = [Span(0, 1, 2, "B"), Span(0, 3, 4, "B")]
    assert matched(gold, pred) == ([False, True], [True, False])


TOKENS = """a B-PER B-PER O
b I-PER I-PER O
c O B-LOC O

d B-ORG B-ORG O
e O O O
"""


def test_token_bucket_accuracy():
    c = parse_conll(TOKENS, ColumnSpec(0, 1, (("mixed", 2), ("none", 3))))
    plan = BucketPlan("sLen", (Interval(0, 1000),), ("B1",), "equal-population")
    part = partition([1.0] * c.n_tokens, plan)
    (mixed,) = token_bucket_accuracy(part, c, "mixed")
    # gold non-O tokens a, b, d; predicted non-O a, b, c, d; all gold ones correct
    assert (mixed.true_positives, mixed.predicted_count, mixed.gold_count) == (3, 4, 3)
    (none,) = token_bucket_accuracy(part, c, "none")
    assert none.f1 == 0.0 and none.gold_count == 3
    # a prediction column copied from the gold one
    copied = "\n".join(line + " " + line.split()[1] if line else "" for line in TOKENS.splitlines())
    ident = parse_conll(copied, ColumnSpec(0, 1, (("copy", 4),)))
    (same,) = token_bucket_accuracy(part, ident, "copy")
    assert same.f1 == 1.0
