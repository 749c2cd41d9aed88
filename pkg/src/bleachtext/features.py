"""Namespaced n-gram features and tf-idf vectors.

Feature strings look like ``"shape|LL LX"`` or ``"char|b c"``: the part
before the first ``|`` is the channel (abstract mode) or gram type
(``word``/``char``, lexical mode), so equal grams from different channels
never collide.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .bleach import (ALL_ABS, BOUNDARY, BleachedDoc, Channel, FrequencyTable,
                     bleach_document, ordered, tokenize)
from .errors import ConfigurationError, ValidationError

LEXICAL = "lexical"
ABSTRACT = "abstract"
TFIDF = "tfidf"
BINARY = "binary"


@dataclass(frozen=True)
class FeatureSpec:
    mode: str = ABSTRACT
    token_ngram_range: tuple[int, int] = (1, 5)
    char_ngram_range: tuple[int, int] | None = None
    channels: frozenset = field(default_factory=lambda: ALL_ABS)
    weighting: str = TFIDF
    min_df: int = 1
    char_min_df: int = 2

    def __post_init__(self):
        if self.mode not in (LEXICAL, ABSTRACT):
            raise ConfigurationError(f"unknown feature mode {self.mode!r}")
        if self.weighting not in (TFIDF, BINARY):
            raise ConfigurationError(f"unknown weighting {self.weighting!r}")
        object.__setattr__(self, "token_ngram_range", tuple(self.token_ngram_range))
        if self.char_ngram_range is not None:
            object.__setattr__(self, "char_ngram_range", tuple(self.char_ngram_range))
        object.__setattr__(self, "channels", frozenset(Channel(c) for c in self.channels))
        for r in (self.token_ngram_range, self.char_ngram_range):
            if r is not None and not (len(r) == 2 and 1 <= r[0] <= r[1]):
                raise ConfigurationError(f"invalid n-gram range {r}")
        if self.mode == ABSTRACT and not self.channels:
            raise ConfigurationError("abstract mode needs at least one channel")
        if self.min_df < 1 or self.char_min_df < 1:
            raise ConfigurationError("min_df must be >= 1")

    @classmethod
    def lexical(cls, word=(1, 2), char=(3, 6), **kw) -> "FeatureSpec":
        return cls(mode=LEXICAL, token_ngram_range=word, char_ngram_range=char,
                   channels=frozenset(), **kw)

    @classmethod
    def abstract(cls, n=5, channels=ALL_ABS, **kw) -> "FeatureSpec":
        return cls(mode=ABSTRACT, token_ngram_range=(1, n), char_ngram_range=None,
                   channels=frozenset(channels), **kw)

    @property
    def needs_frequency_table(self) -> bool:
        return self.mode == ABSTRACT and Channel.Frequency in self.channels

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "token_ngram_range": list(self.token_ngram_range),
            "char_ngram_range": list(self.char_ngram_range) if self.char_ngram_range else None,
            "channels": [c.value for c in ordered(self.channels)],
            "weighting": self.weighting,
            "min_df": self.min_df,
            "char_min_df": self.char_min_df,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureSpec":
        d = dict(d)
        d["channels"] = frozenset(Channel(c) for c in d.get("channels", ()))
        if d.get("char_ngram_range") is not None:
            d["char_ngram_range"] = tuple(d["char_ngram_range"])
        d["token_ngram_range"] = tuple(d["token_ngram_range"])
        return cls(**d)


def _token_ngrams(seq: Sequence[str], lo: int, hi: int, prefix: str, out: Counter) -> None:
    n_tok = len(seq)
    for n in range(lo, hi + 1):
        for i in range(n_tok - n + 1):
            out[prefix + " ".join(seq[i:i + n])] += 1


def _char_ngrams(text: str, lo: int, hi: int, prefix: str, out: Counter) -> None:
    n_chr = len(text)
    for n in range(lo, hi + 1):
        for i in range(n_chr - n + 1):
            out[prefix + text[i:i + n]] += 1


def extract_grams(doc, spec: FeatureSpec) -> Counter:
    """Multiset of namespaced grams.

    ``doc`` is a :class:`BleachedDoc` in abstract mode; in lexical mode it is
    either a raw string or the user's list of (normalized) tweets.
    """
    lo, hi = spec.token_ngram_range
    grams: Counter = Counter()
    if spec.mode == ABSTRACT:
        if not isinstance(doc, BleachedDoc):
            raise ConfigurationError("abstract mode needs a BleachedDoc")
        for c in ordered(spec.channels):
            if c not in doc:
                raise ConfigurationError(f"channel {c.value} missing from the bleached document")
            _token_ngrams(doc[c], lo, hi, c.value + "|", grams)
        return grams

    tweets = [doc] if isinstance(doc, str) else list(doc)
    words: list[str] = []
    for k, tweet in enumerate(tweets):
        if k:
            words.append(BOUNDARY)
        words.extend(tokenize(tweet.lower()))
    _token_ngrams(words, lo, hi, "word|", grams)
    if spec.char_ngram_range is not None:
        clo, chi = spec.char_ngram_range
        _char_ngrams("\n".join(tweets).lower(), clo, chi, "char|", grams)
    return grams


def document_grams(tweets: Sequence[str], spec: FeatureSpec,
                   table: FrequencyTable | None = None) -> Counter:
    """Raw tweets of one user -> gram multiset, bleaching first if needed."""
    if spec.mode == ABSTRACT:
        return extract_grams(bleach_document(tweets, spec.channels, table), spec)
    return extract_grams(tweets, spec)


def namespace(feature: str) -> str:
    return feature.split("|", 1)[0]


@dataclass(frozen=True, eq=False)
class Vocabulary:
    features: tuple[str, ...]
    df: np.ndarray
    n_docs: int
    provenance: frozenset = field(default_factory=frozenset)
    index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        object.__setattr__(self, "df", np.asarray(self.df, dtype=np.int64))
        object.__setattr__(self, "index", {f: i for i, f in enumerate(self.features)})
        if len(self.index) != len(self.features) or len(self.df) != len(self.features):
            raise ValidationError("vocabulary features must be unique and match df")

    def __len__(self):
        return len(self.features)

    def __eq__(self, other):
        if not isinstance(other, Vocabulary):
            return NotImplemented
        return (self.features == other.features and self.n_docs == other.n_docs
                and np.array_equal(self.df, other.df) and self.provenance == other.provenance)

    __hash__ = None

    def idf(self) -> np.ndarray:
        return np.log((1.0 + self.n_docs) / (1.0 + self.df)) + 1.0


def build_vocabulary(docs: Iterable[Counter], min_df: int = 1,
                     min_df_by_namespace: dict[str, int] | None = None,
                     provenance: Iterable = ()) -> Vocabulary:
    """Index every gram whose document frequency reaches its threshold.

    Indices follow lexicographic order of the feature strings.
    """
    if min_df < 1:
        raise ValidationError("min_df must be >= 1")
    df: Counter = Counter()
    n_docs = 0
    for grams in docs:
        df.update(grams.keys())
        n_docs += 1
    if n_docs == 0:
        raise ValidationError("cannot build a vocabulary from zero documents")
    thresholds = min_df_by_namespace or {}
    kept = sorted(f for f, c in df.items() if c >= thresholds.get(namespace(f), min_df))
    return Vocabulary(tuple(kept), np.array([df[f] for f in kept], dtype=np.int64), n_docs,
                      frozenset(provenance))


def vocabulary_for(spec: FeatureSpec, docs: Iterable[Counter], provenance=()) -> Vocabulary:
    by_ns = {"char": spec.char_min_df} if spec.mode == LEXICAL else None
    return build_vocabulary(docs, spec.min_df, by_ns, provenance)


@dataclass(frozen=True)
class SparseVector:
    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        val = np.asarray(self.values, dtype=np.float64)
        if idx.shape != val.shape or idx.ndim != 1:
            raise ValidationError("indices and values must be 1-d arrays of equal length")
        if len(idx) > 1 and np.any(np.diff(idx) <= 0):
            raise ValidationError("sparse indices must be strictly increasing")
        if not np.all(np.isfinite(val)):
            raise ValidationError("sparse vector has non-finite weights")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)

    def __len__(self):
        return len(self.indices)

    @classmethod
    def from_dense(cls, x) -> "SparseVector":
        x = np.asarray(x, dtype=np.float64)
        return cls(np.arange(len(x)), x)

    def to_dense(self, size: int) -> np.ndarray:
        out = np.zeros(size)
        out[self.indices] = self.values
        return out

    def norm(self) -> float:
        return float(np.sqrt(np.dot(self.values, self.values)))


def vectorize(grams: Counter, vocab: Vocabulary, weighting: str = TFIDF) -> SparseVector:
    known = sorted((vocab.index[g], c) for g, c in grams.items() if g in vocab.index)
    if not known:
        return SparseVector(np.empty(0, np.int64), np.empty(0))
    idx = np.fromiter((i for i, _ in known), dtype=np.int64, count=len(known))
    if weighting == BINARY:
        return SparseVector(idx, np.ones(len(idx)))
    if weighting != TFIDF:
        raise ConfigurationError(f"unknown weighting {weighting!r}")
    tf = np.fromiter((c for _, c in known), dtype=np.float64, count=len(known))
    idf = np.log((1.0 + vocab.n_docs) / (1.0 + vocab.df[idx])) + 1.0
    w = (1.0 + np.log(tf)) * idf
    return SparseVector(idx, w / math.sqrt(float(np.dot(w, w))))
