"""Synthetic train/test corpora with simulated systems of known weaknesses.

Used by the test-suite and handy for trying the CLI without real data.
Everything is driven by ``random.Random(index)``, so fixture ``i`` is the
same on every machine.

Two simulated systems are built in:

* ``long_weak`` misses or mislabels an entity with a probability that grows
  with the entity's length;
* ``con_weak`` does so with a probability that shrinks as the entity's
  label consistency in the training data grows.

``uniform`` (optional) errs at a constant rate.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .corpus import Corpus, Sentence, Token, encode_spans

CATEGORIES = ("PER", "LOC", "ORG", "MISC")
_LENGTHS = (1, 2, 3, 4, 5)
_LENGTH_WEIGHTS = (0.40, 0.28, 0.16, 0.10, 0.06)


@dataclass(frozen=True)
class EntityType:
    words: tuple[str, ...]
    labels: tuple[tuple[str, float], ...]  # label distribution in training
    train_count: int  # 0 for surfaces never seen in training

    def consistency(self, label: str) -> float:
        if self.train_count == 0:
            return 0.0
        return dict(self.labels).get(label, 0.0)


def _entity_types(rng: random.Random, n: int) -> list[EntityType]:
    out = []
    for i in range(n):
        length = rng.choices(_LENGTHS, _LENGTH_WEIGHTS)[0]
        words = tuple(f"E{i}w{j}" for j in range(length))
        first = rng.choice(CATEGORIES)
        kind = rng.random()
        if kind < 0.2:
            count = 0
            labels = ((first, 1.0),)
        elif kind < 0.6:
            count = rng.randint(1, 6)
            labels = ((first, 1.0),)
        else:
            count = rng.choice((2, 3, 4, 5, 6))
            second = rng.choice([c for c in CATEGORIES if c != first])
            k = rng.randint(1, count - 1)
            labels = ((first, k / count), (second, 1 - k / count))
        out.append(EntityType(words, labels, count))
    return out


def _training_labels(et: EntityType) -> list[str]:
    # exact label counts, so training consistency equals the stated distribution
    out = []
    for label, share in et.labels:
        out += [label] * round(share * et.train_count)
    return out


def _fill(rng: random.Random, pieces: list, length: int, filler) -> tuple[list[str], list[tuple[int, int, str]]]:
    """Lay entity pieces into a sentence of ``length`` tokens padded with filler words."""
    n_ent = sum(len(w) for w, _ in pieces)
    gaps = length - n_ent
    # choose how many filler words go before each entity
    cuts = sorted(rng.randint(0, gaps) for _ in pieces)
    words: list[str] = []
    spans = []
    prev = 0
    for (ws, label), c in zip(pieces, cuts):
        words += [filler() for _ in range(c - prev)]
        prev = c
        spans.append((len(words), len(words) + len(ws), label))
        words += list(ws)
    words += [filler() for _ in range(gaps - prev)]
    return words, spans


def _sentence(words, gold_spans, preds, index) -> Sentence:
    gold = encode_spans(gold_spans, len(words))
    pred_tags = [encode_spans(p, len(words)) for p in preds]
    toks = tuple(Token(w, g, tuple(p[i] for p in pred_tags)) for i, (w, g) in enumerate(zip(words, gold)))
    return Sentence(toks, index)


def long_weak_rate(length: int) -> float:
    return min(0.9, 0.05 + 0.22 * (length - 1))


def con_weak_rate(consistency: float) -> float:
    return 0.05 + 0.75 * (1.0 - consistency)


def generate(index: int, n_test_sentences: int = 1500, n_types: int = 600,
             uniform: bool = False) -> tuple[Corpus, Corpus]:
    """Training corpus and a test corpus carrying the simulated systems' tags."""
    rng = random.Random(index)
    types = _entity_types(rng, n_types)
    seen = [t for t in types if t.train_count]
    common = [f"w{i}" for i in range(400)]

    def train_filler():
        return rng.choice(common)

    # training: every seen entity type occurs exactly train_count times
    occurrences = [(t.words, lab) for t in seen for lab in _training_labels(t)]
    rng.shuffle(occurrences)
    train_sents = []
    i = 0
    while i < len(occurrences):
        k = rng.randint(1, 3)
        pieces = occurrences[i:i + k]
        i += k
        need = sum(len(w) for w, _ in pieces)
        words, spans = _fill(rng, pieces, need + rng.randint(4, 20), train_filler)
        train_sents.append(_sentence(words, spans, [], len(train_sents)))
    # make sure every common filler word is in the training vocabulary
    train_sents.append(_sentence(common, [], [], len(train_sents)))

    systems = ["long_weak", "con_weak"] + (["uniform"] if uniform else [])

    def test_filler():
        return rng.choice(common) if rng.random() < 0.9 else f"u{rng.randrange(5000)}"

    def corrupt(span, p):
        start, end, label = span
        if rng.random() >= p:
            return span
        if rng.random() < 0.5:
            return None
        return (start, end, rng.choice([c for c in CATEGORIES if c != label]))

    test_sents = []
    for si in range(n_test_sentences):
        pieces = []
        for _ in range(rng.randint(1, 3)):
            t = rng.choice(types)
            if t.train_count:
                names, weights = zip(*t.labels)
                label = rng.choices(names, weights)[0]
            else:
                label = t.labels[0][0]
            pieces.append((t.words, label, t))
        length = rng.randint(16, 45)
        words, spans = _fill(rng, [(w, lab) for w, lab, _ in pieces], length, test_filler)
        rates = [
            [long_weak_rate(len(w)) for w, _, _ in pieces],
            [con_weak_rate(t.consistency(lab)) for _, lab, t in pieces],
        ]
        if uniform:
            rates.append([0.2] * len(pieces))
        preds = []
        for r in rates:
            kept = [corrupt(s, p) for s, p in zip(spans, r)]
            preds.append([s for s in kept if s is not None])
        test_sents.append(_sentence(words, spans, preds, si))

    train = Corpus(tuple(train_sents), (), "train")
    test = Corpus(tuple(test_sents), tuple(systems), "test")
    return train, test


def scale_corpus(n_tokens: int = 100_000, index: int = 0) -> tuple[Corpus, Corpus]:
    """A test corpus of roughly ``n_tokens`` tokens with three systems."""
    # test sentences average about 30 tokens
    return generate(index, n_test_sentences=max(1, n_tokens // 30), n_types=3000, uniform=True)


def to_conll(corpus: Corpus, systems: bool = True) -> str:
    """Tab-separated text: token, gold tag, then one column per system."""
    lines = []
    for sent in corpus.sentences:
        for t in sent.tokens:
            cols = [t.surface, str(t.gold)]
            if systems:
                cols += [str(p) for p in t.predictions]
            lines.append("\t".join(cols))
        lines.append("")
    return "\n".join(lines) + "\n"


def system_file(corpus: Corpus, system: str) -> str:
    """Single-system file (token and predicted tag) aligned with ``to_conll`` output."""
    col = corpus.system_index(system)
    lines = []
    for sent in corpus.sentences:
        for t in sent.tokens:
            lines.append(f"{t.surface}\t{t.predictions[col]}")
        lines.append("")
    return "\n".join(lines) + "\n"

