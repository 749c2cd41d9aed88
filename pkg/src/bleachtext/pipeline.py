"""Users in, fitted model out: frequency table, vocabulary, vectors, SVM."""
from __future__ import annotations

from collections import Counter
from dataclasses import replace
from typing import Sequence

from .bleach import Channel, FrequencyTable
from .corpus import UserRecord
from .errors import HygieneError
from .features import (ABSTRACT, FeatureSpec, SparseVector, document_grams,
                       vectorize, vocabulary_for)
from .linear import LinearModel, TrainerConfig, train


class GramCache:
    """Memoizes per-user grams that do not depend on the training split.

    Only the ``freq`` channel depends on the split (through the frequency
    table), so it is recomputed for every fit; all other channels, and every
    lexical gram, are computed once per user.
    """

    def __init__(self, spec: FeatureSpec):
        self.spec = spec
        self._static: dict = {}
        if spec.mode == ABSTRACT and Channel.Frequency in spec.channels:
            rest = spec.channels - {Channel.Frequency}
            self._static_spec = replace(spec, channels=rest) if rest else None
            self._freq_spec = replace(spec, channels=frozenset({Channel.Frequency}))
        else:
            self._static_spec = spec
            self._freq_spec = None

    def grams(self, user: UserRecord, table: FrequencyTable | None) -> Counter:
        key = user.key
        if self._static_spec is None:
            static = Counter()
        else:
            static = self._static.get(key)
            if static is None:
                static = document_grams(user.tweets, self._static_spec)
                self._static[key] = static
        if self._freq_spec is None:
            return static
        out = document_grams(user.tweets, self._freq_spec, table)
        out.update(static)
        return out


def user_grams(users: Sequence[UserRecord], spec: FeatureSpec, table: FrequencyTable | None,
               cache: GramCache | None = None) -> list[Counter]:
    if cache is not None:
        return [cache.grams(u, table) for u in users]
    return [document_grams(u.tweets, spec, table) for u in users]


def fit_model(users: Sequence[UserRecord], spec: FeatureSpec,
              trainer: TrainerConfig = TrainerConfig(), cache: GramCache | None = None,
              use_numba=None) -> LinearModel:
    """Build frequency table and vocabulary from ``users`` only, then train."""
    users = list(users)
    provenance = frozenset(u.key for u in users)
    table = FrequencyTable.from_users(users) if spec.needs_frequency_table else None
    grams = user_grams(users, spec, table, cache)
    vocab = vocabulary_for(spec, grams, provenance)
    X = [vectorize(g, vocab, spec.weighting) for g in grams]
    model = train(X, [u.gender for u in users], trainer, n_features=len(vocab), use_numba=use_numba)
    model.spec = spec
    model.vocab = vocab
    model.freq_table = table
    model.provenance = provenance
    return model


def check_hygiene(model: LinearModel, users: Sequence[UserRecord]) -> None:
    """Raise if any of ``users`` contributed to the model's training side."""
    keys = {u.key for u in users}
    sources = {
        "training set": model.provenance,
        "vocabulary": model.vocab.provenance if model.vocab is not None else frozenset(),
        "frequency table": model.freq_table.provenance if model.freq_table is not None else frozenset(),
    }
    for what, prov in sources.items():
        leaked = keys & prov
        if leaked:
            example = sorted(leaked)[0]
            raise HygieneError(f"{len(leaked)} evaluation user(s) leaked into the {what}, e.g. {example}")


def featurize(model: LinearModel, users: Sequence[UserRecord],
              cache: GramCache | None = None) -> list[SparseVector]:
    grams = user_grams(users, model.spec, model.freq_table, cache)
    return [vectorize(g, model.vocab, model.spec.weighting) for g in grams]


def predict_users(model: LinearModel, users: Sequence[UserRecord],
                  cache: GramCache | None = None) -> list[str]:
    return model.predict_many(featurize(model, users, cache))
