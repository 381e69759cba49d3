"""Attribute feature functions for test spans and tokens.

Local attributes (entity length, sentence length, entity density, OOV
density) look only at the span and its sentence.  Aggregate attributes
(frequency and label consistency, at entity and token level) are ratios over
training-set statistics collected once by :func:`build_training_stats`.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from statistics import fmean
from typing import Mapping

from .corpus import Corpus, Span, decode_spans, extract_spans

ATTRIBUTES = ("eLen", "sLen", "eDen", "oDen", "eCon", "eFre", "tCon", "tFre")
SPAN_NATIVE = frozenset({"eLen", "eCon", "eFre"})
TOKEN_NATIVE = frozenset({"tCon", "tFre"})
SENTENCE_LEVEL = frozenset({"sLen", "eDen", "oDen"})
COUNT_VALUED = frozenset({"eLen", "sLen"})

STATS_VERSION = 1


def check_attributes(attrs) -> tuple[str, ...]:
    attrs = tuple(attrs)
    bad = [a for a in attrs if a not in ATTRIBUTES]
    if bad:
        raise ValueError(f"unknown attribute(s) {', '.join(bad)}; choose from {', '.join(ATTRIBUTES)}")
    return attrs


@dataclass(frozen=True)
class SurfaceRow:
    total: int
    labels: Mapping[str, int]


@dataclass
class TrainingStats:
    entity_table: dict[str, Counter] = field(default_factory=dict)
    token_table: dict[str, Counter] = field(default_factory=dict)
    vocabulary: frozenset[str] = frozenset()
    total_entities: int = 0
    total_tokens: int = 0
    lowercase: bool = False

    def norm(self, surface: str) -> str:
        return surface.lower() if self.lowercase else surface

    def entity_row(self, surface: str) -> SurfaceRow | None:
        c = self.entity_table.get(self.norm(surface))
        return None if c is None else SurfaceRow(sum(c.values()), c)

    def token_row(self, surface: str) -> SurfaceRow | None:
        c = self.token_table.get(self.norm(surface))
        return None if c is None else SurfaceRow(sum(c.values()), c)

    def in_vocabulary(self, surface: str) -> bool:
        return self.norm(surface) in self.vocabulary

    def to_json(self) -> dict:
        return {
            "version": STATS_VERSION,
            "lowercase": self.lowercase,
            "total_entities": self.total_entities,
            "total_tokens": self.total_tokens,
            "entities": {s: dict(sorted(c.items())) for s, c in sorted(self.entity_table.items())},
            "tokens": {s: dict(sorted(c.items())) for s, c in sorted(self.token_table.items())},
            "vocabulary": sorted(self.vocabulary),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "TrainingStats":
        if doc.get("version") != STATS_VERSION:
            raise ValueError(f"unsupported training-stats version {doc.get('version')!r}")
        return cls(
            entity_table={s: Counter(c) for s, c in doc["entities"].items()},
            token_table={s: Counter(c) for s, c in doc["tokens"].items()},
            vocabulary=frozenset(doc["vocabulary"]),
            total_entities=doc["total_entities"],
            total_tokens=doc["total_tokens"],
            lowercase=doc["lowercase"],
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_json(), f, ensure_ascii=False, indent=1)
            f.write("\n")

    @classmethod
    def load(cls, path) -> "TrainingStats":
        with open(path, encoding="utf-8") as f:
            return cls.from_json(json.load(f))


def token_labels(tags, scheme: str = "BIO") -> list[str]:
    """Category covering each token, or ``"O"``."""
    labels = ["O"] * len(tags)
    for start, end, cat in decode_spans(tags, scheme):
        for i in range(start, end):
            labels[i] = cat
    return labels


def build_training_stats(train: Corpus, scheme: str = "BIO", lowercase: bool = False) -> TrainingStats:
    if train.role != "train":
        raise ValueError("training statistics need a corpus with role 'train'")
    norm = str.lower if lowercase else (lambda s: s)
    entities: dict[str, Counter] = {}
    tokens: dict[str, Counter] = {}
    n_ent = n_tok = 0
    for span in extract_spans(train, None, scheme):
        entities.setdefault(norm(span.surface), Counter())[span.label] += 1
        n_ent += 1
    for sent in train.sentences:
        for tok, lab in zip(sent.tokens, token_labels([t.gold for t in sent.tokens], scheme)):
            tokens.setdefault(norm(tok.surface), Counter())[lab] += 1
            n_tok += 1
    return TrainingStats(entities, tokens, frozenset(tokens), n_ent, n_tok, lowercase)


# Individual feature functions.  Sentence-level ones take the sentence's
# surfaces and its gold entity count so they serve spans and tokens alike.

def phi_eLen(span: Span) -> int:
    return span.end - span.start


def phi_sLen(surfaces) -> int:
    return len(surfaces)


def phi_eDen(surfaces, n_entities: int) -> float:
    return n_entities / len(surfaces)


def phi_oDen(surfaces, stats: TrainingStats) -> float:
    return sum(not stats.in_vocabulary(s) for s in surfaces) / len(surfaces)


def _consistency(row: SurfaceRow | None, label: str) -> float:
    if row is None or row.total == 0:
        return 0.0
    return row.labels.get(label, 0) / row.total


def _frequency(row: SurfaceRow | None, total: int) -> float:
    if row is None or total == 0:
        return 0.0
    return row.total / total


def phi_eCon(surface: str, label: str, stats: TrainingStats) -> float:
    """Share of training occurrences of ``surface`` (as an entity) labelled ``label``; 0 if unseen."""
    return _consistency(stats.entity_row(surface), label)


def phi_tCon(surface: str, label: str, stats: TrainingStats) -> float:
    return _consistency(stats.token_row(surface), label)


def phi_eFre(surface: str, stats: TrainingStats) -> float:
    return _frequency(stats.entity_row(surface), stats.total_entities)


def phi_tFre(surface: str, stats: TrainingStats) -> float:
    return _frequency(stats.token_row(surface), stats.total_tokens)


class Featurizer:
    """Attribute values for spans and tokens of one test corpus.

    Sentence-level values are computed once per sentence.  Entity density
    always counts gold entities, whichever side the queried item comes from.
    """

    def __init__(self, corpus: Corpus, stats: TrainingStats, scheme: str = "BIO"):
        self.corpus = corpus
        self.stats = stats
        self.scheme = scheme
        n_gold = Counter(s.sentence_index for s in extract_spans(corpus, None, scheme))
        self._sentence = []
        self._labels: dict[int, list[str]] = {}
        for sent in corpus.sentences:
            surf = sent.surfaces
            self._sentence.append({
                "sLen": float(phi_sLen(surf)),
                "eDen": phi_eDen(surf, n_gold[sent.index]),
                "oDen": phi_oDen(surf, stats),
            })

    def sentence_value(self, sentence_index: int, attr: str) -> float:
        return self._sentence[sentence_index][attr]

    def token_value(self, sentence_index: int, position: int, attr: str, label: str | None = None) -> float:
        """Attribute of a single token; ``label`` defaults to its gold token label."""
        if attr in SENTENCE_LEVEL:
            return self._sentence[sentence_index][attr]
        surface = self.corpus.sentences[sentence_index].tokens[position].surface
        if attr == "tFre":
            return phi_tFre(surface, self.stats)
        if attr == "tCon":
            if label is None:
                label = self._gold_token_labels(sentence_index)[position]
            return phi_tCon(surface, label, self.stats)
        raise ValueError(f"{attr} is not defined for tokens")

    def _gold_token_labels(self, sentence_index: int) -> list[str]:
        labels = self._labels.get(sentence_index)
        if labels is None:
            sent = self.corpus.sentences[sentence_index]
            labels = self._labels[sentence_index] = token_labels([t.gold for t in sent.tokens], self.scheme)
        return labels

    def span_value(self, span: Span, attr: str) -> float:
        if attr == "eLen":
            return float(phi_eLen(span))
        if attr in SENTENCE_LEVEL:
            return self._sentence[span.sentence_index][attr]
        if attr == "eCon":
            return phi_eCon(span.surface, span.label, self.stats)
        if attr == "eFre":
            return phi_eFre(span.surface, self.stats)
        if attr in TOKEN_NATIVE:
            toks = self.corpus.sentences[span.sentence_index].tokens[span.start:span.end]
            if attr == "tFre":
                return fmean(phi_tFre(t.surface, self.stats) for t in toks)
            return fmean(phi_tCon(t.surface, span.label, self.stats) for t in toks)
        raise ValueError(f"unknown attribute {attr!r}")

    def token_items(self) -> list[tuple[int, int]]:
        return [(s.index, i) for s in self.corpus.sentences for i in range(len(s))]


def span_attribute(span: Span, attr: str, featurizer: Featurizer) -> float:
    return featurizer.span_value(span, attr)
