"""Reading CoNLL-style column files and decoding tag sequences into spans.

Each non-blank line holds one token; columns are separated by any run of
horizontal whitespace.  Blank lines end a sentence and ``-DOCSTART-`` lines
are ignored.  Predictions may sit in extra columns of the test file or in
separate files aligned line by line with it.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

SCHEMES = ("BIO", "BIOES")
_PREFIXES = {"BIO": frozenset("BIO"), "BIOES": frozenset("BIOES")}
_SPLIT = re.compile(r"[ \t\f\v]+")


class CorpusError(ValueError):
    """Base class for malformed input."""


class RaggedRow(CorpusError):
    pass


class BadTag(CorpusError):
    pass


class EmptyCorpus(CorpusError):
    pass


class UnknownSystem(KeyError):
    pass


class AlignmentError(CorpusError):
    pass


@dataclass(frozen=True)
class Tag:
    prefix: str
    category: str = ""

    def __post_init__(self):
        if self.prefix not in "BIOES" or len(self.prefix) != 1:
            raise BadTag(f"unknown tag prefix {self.prefix!r}")
        if (self.prefix == "O") != (self.category == ""):
            raise BadTag(f"bad tag {self.prefix}-{self.category}")

    @classmethod
    def parse(cls, text: str, scheme: str = "BIOES") -> "Tag":
        if text == "O":
            return OUTSIDE
        prefix, sep, category = text.partition("-")
        if not sep or not category or len(prefix) != 1 or prefix not in _PREFIXES[scheme] or prefix == "O":
            raise BadTag(f"tag {text!r} is not valid under {scheme}")
        return cls(prefix, category)

    def __str__(self) -> str:
        return "O" if self.prefix == "O" else f"{self.prefix}-{self.category}"


OUTSIDE = Tag("O")


@lru_cache(maxsize=4096)
def _cached_tag(text: str, scheme: str) -> Tag:
    # files repeat a handful of distinct tags, so parse each once
    return Tag.parse(text, scheme)


@dataclass(frozen=True)
class Token:
    surface: str
    gold: Tag
    predictions: tuple[Tag, ...] = ()


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[Token, ...]
    index: int

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def surfaces(self) -> tuple[str, ...]:
        return tuple(t.surface for t in self.tokens)


@dataclass(frozen=True, order=True)
class Span:
    sentence_index: int
    start: int
    end: int
    label: str
    surface: str = field(default="", compare=False)

    @property
    def key(self) -> tuple[int, int, int, str]:
        return (self.sentence_index, self.start, self.end, self.label)

    def __len__(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class Corpus:
    sentences: tuple[Sentence, ...]
    systems: tuple[str, ...] = ()
    role: str = "test"

    def __post_init__(self):
        if self.role not in ("train", "test"):
            raise ValueError(f"role must be train or test, not {self.role!r}")
        if self.role == "train" and self.systems:
            raise ValueError("training corpora carry gold tags only")

    def __len__(self) -> int:
        return len(self.sentences)

    @property
    def n_tokens(self) -> int:
        return sum(len(s) for s in self.sentences)

    def select_systems(self, names) -> "Corpus":
        """Copy keeping only ``names``' predictions, in that order."""
        idx = [self.system_index(n) for n in names]
        sents = tuple(
            Sentence(tuple(Token(t.surface, t.gold, tuple(t.predictions[i] for i in idx)) for t in s.tokens),
                     s.index)
            for s in self.sentences)
        return Corpus(sents, tuple(names), self.role)

    def system_index(self, name: str) -> int:
        try:
            return self.systems.index(name)
        except ValueError:
            raise UnknownSystem(name) from None


@dataclass(frozen=True)
class ColumnSpec:
    """Which columns hold the token, the gold tag and each system's tag.

    Negative indices count from the end of each line.
    """

    token_column: int = 0
    gold_column: int = -1
    prediction_columns: tuple[tuple[str, int], ...] = ()
    scheme: str = "BIO"

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        cols = [self.token_column, self.gold_column] + [c for _, c in self.prediction_columns]
        if len(set(cols)) != len(cols):
            raise ValueError("column indices must be distinct")
        names = [n for n, _ in self.prediction_columns]
        if len(set(names)) != len(names):
            raise ValueError("system names must be distinct")

    @property
    def width(self) -> int:
        """Minimum number of columns a line needs."""
        cols = [self.token_column, self.gold_column] + [c for _, c in self.prediction_columns]
        return max(c + 1 if c >= 0 else -c for c in cols)


def _lines(text: str | Iterable[str]) -> Iterable[str]:
    if isinstance(text, str):
        return text.splitlines()
    return (line.rstrip("\r\n") for line in text)


def parse_conll(text: str | Iterable[str], spec: ColumnSpec = ColumnSpec(), role: str = "test") -> Corpus:
    sentences: list[Sentence] = []
    tokens: list[Token] = []
    width = spec.width
    n_cols = 2 + len(spec.prediction_columns)

    def flush():
        if tokens:
            sentences.append(Sentence(tuple(tokens), len(sentences)))
            tokens.clear()

    checked_widths = set()
    pred_cols = [c for _, c in spec.prediction_columns]
    for lineno, line in enumerate(_lines(text), 1):
        stripped = line.strip()
        if not stripped:
            flush()
            continue
        if stripped.startswith("-DOCSTART-"):
            continue
        cols = _SPLIT.split(stripped)
        if len(cols) not in checked_widths:
            if len(cols) < width:
                raise RaggedRow(f"line {lineno}: expected at least {width} columns, got {len(cols)}")
            resolved = {c if c >= 0 else len(cols) + c for c in
                        [spec.token_column, spec.gold_column, *pred_cols]}
            if len(resolved) != n_cols:
                raise RaggedRow(f"line {lineno}: column indices overlap on a {len(cols)}-column line")
            checked_widths.add(len(cols))
        try:
            gold = _cached_tag(cols[spec.gold_column], spec.scheme)
            preds = tuple(_cached_tag(cols[c], spec.scheme) for c in pred_cols)
        except BadTag as e:
            raise BadTag(f"line {lineno}: {e} in {line!r}") from None
        tokens.append(Token(cols[spec.token_column], gold, preds))
    flush()
    if not sentences:
        raise EmptyCorpus("no sentences found")
    systems = tuple(n for n, _ in spec.prediction_columns)
    return Corpus(tuple(sentences), systems, role)


def read_conll(path, spec: ColumnSpec = ColumnSpec(), role: str = "test") -> Corpus:
    with open(path, encoding="utf-8", newline="") as f:
        return parse_conll(f, spec, role)


def attach_predictions(corpus: Corpus, name: str, predicted: Corpus) -> Corpus:
    """Add the gold column of ``predicted`` as system ``name``'s tags.

    The two corpora must agree on sentence boundaries and token surfaces.
    """
    if name in corpus.systems:
        raise ValueError(f"system {name!r} already registered")
    if len(predicted) != len(corpus):
        raise AlignmentError(
            f"{name}: {len(predicted)} sentences but the test file has {len(corpus)}")
    sentences = []
    for sent, psent in zip(corpus.sentences, predicted.sentences):
        if len(sent) != len(psent):
            raise AlignmentError(f"{name}: sentence {sent.index} has {len(psent)} tokens, expected {len(sent)}")
        toks = []
        for i, (tok, ptok) in enumerate(zip(sent.tokens, psent.tokens)):
            if tok.surface != ptok.surface:
                raise AlignmentError(
                    f"{name}: sentence {sent.index} token {i}: {ptok.surface!r} != {tok.surface!r}")
            toks.append(Token(tok.surface, tok.gold, tok.predictions + (ptok.gold,)))
        sentences.append(Sentence(tuple(toks), sent.index))
    return Corpus(tuple(sentences), corpus.systems + (name,), corpus.role)


def decode_spans(labels: Sequence[Tag], scheme: str = "BIO") -> list[tuple[int, int, str]]:
    """Turn a tag sequence into ``(start, end, category)`` triples, end exclusive.

    Malformed sequences are repaired rather than rejected: a continuation tag
    that does not match the open span starts a new one, and under BIOES an
    ``E`` without a matching open span becomes a singleton.
    """
    spans = []
    start = None
    cat = None
    for i, tag in enumerate(labels):
        p = tag.prefix
        if p == "O":
            if start is not None:
                spans.append((start, i, cat))
            start = None
            continue
        if p == "B" or p == "S" or start is None or cat != tag.category:
            if start is not None:
                spans.append((start, i, cat))
            start, cat = i, tag.category
        if p == "S" or (p == "E" and scheme == "BIOES"):
            spans.append((start, i + 1, cat))
            start = None
    if start is not None:
        spans.append((start, len(labels), cat))
    return spans


def encode_spans(spans: Iterable[tuple[int, int, str]], length: int, scheme: str = "BIO") -> list[Tag]:
    tags = [OUTSIDE] * length
    for start, end, cat in spans:
        if scheme == "BIOES" and end - start == 1:
            tags[start] = Tag("S", cat)
            continue
        tags[start] = Tag("B", cat)
        for i in range(start + 1, end):
            tags[i] = Tag("I", cat)
        if scheme == "BIOES":
            tags[end - 1] = Tag("E", cat)
    return tags


def extract_spans(corpus: Corpus, source: str | None = None, scheme: str = "BIO") -> list[Span]:
    """All spans of the gold side (``source=None``) or of a registered system."""
    col = None if source is None else corpus.system_index(source)
    out = []
    for sent in corpus.sentences:
        if col is None:
            tags = [t.gold for t in sent.tokens]
        else:
            tags = [t.predictions[col] for t in sent.tokens]
        for start, end, cat in decode_spans(tags, scheme):
            surface = " ".join(t.surface for t in sent.tokens[start:end])
            out.append(Span(sent.index, start, end, cat, surface))
    return out
