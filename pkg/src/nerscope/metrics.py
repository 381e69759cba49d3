"""Exact-match precision, recall and F1, overall and per bucket."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .attributes import token_labels
from .bucketing import Partition
from .corpus import Corpus, Span


@dataclass(frozen=True)
class PRF:
    true_positives: int
    predicted_count: int
    gold_count: int
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, tp: int, n_pred: int, n_gold: int, tp_pred: int | None = None) -> "PRF":
        # tp_pred: matched predictions, when counted separately from matched gold
        tp_pred = tp if tp_pred is None else tp_pred
        p = tp_pred / n_pred if n_pred else 0.0
        r = tp / n_gold if n_gold else 0.0
        f = 2 * p * r / (p + r) if p + r else 0.0
        return cls(tp, n_pred, n_gold, p, r, f)

    def as_dict(self) -> dict:
        return {
            "tp": self.true_positives, "n_pred": self.predicted_count, "n_gold": self.gold_count,
            "precision": self.precision, "recall": self.recall, "f1": self.f1,
        }


def micro_f1(gold: Sequence[Span], pred: Sequence[Span]) -> PRF:
    g = Counter(s.key for s in gold)
    p = Counter(s.key for s in pred)
    tp = sum(min(c, p[k]) for k, c in g.items())
    return PRF.from_counts(tp, len(pred), len(gold))


def matched(gold: Sequence[Span], pred: Sequence[Span]) -> tuple[list[bool], list[bool]]:
    """Flags telling which gold and which predicted spans have an exact partner."""
    gk = {s.key for s in gold}
    pk = {s.key for s in pred}
    return [s.key in pk for s in gold], [s.key in gk for s in pred]


def bucket_prf(gold_part: Partition, pred_part: Partition,
               gold: Sequence[Span], pred: Sequence[Span], hits=None) -> list[PRF | None]:
    """Per-bucket scores: recall over gold spans in the bucket, precision over predictions in it.

    A bucket with no gold spans gets ``None``.  ``hits`` may carry the result
    of :func:`matched` when scoring many partitions of the same spans.
    """
    g_hit, p_hit = matched(gold, pred) if hits is None else hits
    out = []
    for g_members, p_members in zip(gold_part.members, pred_part.members):
        if not g_members:
            out.append(None)
            continue
        tp = sum(g_hit[i] for i in g_members)
        tp_pred = sum(p_hit[i] for i in p_members)
        out.append(PRF.from_counts(tp, len(p_members), len(g_members), tp_pred))
    return out


def token_bucket_accuracy(part: Partition, corpus: Corpus, system: str,
                          scheme: str = "BIO") -> list[PRF | None]:
    """Token-level micro scores per bucket over non-O categories.

    ``part`` indexes tokens in document order (sentence by sentence).
    """
    col = corpus.system_index(system)
    gold_lab: list[str] = []
    pred_lab: list[str] = []
    for sent in corpus.sentences:
        gold_lab += token_labels([t.gold for t in sent.tokens], scheme)
        pred_lab += token_labels([t.predictions[col] for t in sent.tokens], scheme)
    out = []
    for members in part.members:
        if not members:
            out.append(None)
            continue
        tp = n_pred = n_gold = 0
        for i in members:
            g, p = gold_lab[i], pred_lab[i]
            n_gold += g != "O"
            n_pred += p != "O"
            tp += g != "O" and g == p
        out.append(PRF.from_counts(tp, n_pred, n_gold))
    return out
