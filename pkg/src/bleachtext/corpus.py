"""Loading, normalizing, balancing and splitting user-labelled corpora.

A corpus file is UTF-8 JSON-lines, one user per line::

    {"user_id": "u17", "gender": "F", "tweets": ["...", "..."]}

The language is not stored per line; it is supplied by the caller.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError

GENDERS = ("F", "M")

_MENTION_RE = re.compile(r"(?<!\S)@\w+")
_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)


@dataclass(frozen=True)
class UserRecord:
    user_id: str
    gender: str
    tweets: tuple[str, ...]
    language: str = ""

    def __post_init__(self):
        if not self.user_id:
            raise ValidationError("user_id must be non-empty")
        if self.gender not in GENDERS:
            raise ValidationError(f"unknown gender {self.gender!r} for user {self.user_id!r}")
        if not self.tweets:
            raise ValidationError(f"user {self.user_id!r} has no tweets")
        object.__setattr__(self, "tweets", tuple(self.tweets))

    @property
    def key(self) -> tuple[str, str]:
        """Provenance key, unique across corpora of different languages."""
        return (self.language, self.user_id)

    @property
    def document(self) -> str:
        return "\n".join(self.tweets)


@dataclass(frozen=True)
class Corpus:
    language: str
    users: tuple[UserRecord, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "users", tuple(self.users))
        seen = set()
        for u in self.users:
            if u.user_id in seen:
                raise ValidationError(f"duplicate user_id {u.user_id!r}")
            seen.add(u.user_id)

    def __len__(self):
        return len(self.users)

    def __iter__(self):
        return iter(self.users)

    @property
    def labels(self) -> list[str]:
        return [u.gender for u in self.users]

    def gender_counts(self) -> dict[str, int]:
        counts = {g: 0 for g in GENDERS}
        for u in self.users:
            counts[u.gender] += 1
        return counts

    def subset(self, indices) -> "Corpus":
        return Corpus(self.language, tuple(self.users[i] for i in indices))


def normalize_text(raw: str) -> str:
    """Replace @-mentions with ``USER`` and URLs with ``URL``; nothing else changes."""
    text = _URL_RE.sub("URL", raw)
    return _MENTION_RE.sub("USER", text)


def load_corpus(path, language: str, normalize: bool = True) -> Corpus:
    path = Path(path)
    users = []
    seen: dict[str, int] = {}
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"malformed JSON ({exc.msg})", line=lineno, path=path) from None
            if not isinstance(obj, dict):
                raise ParseError("record must be a JSON object", line=lineno, path=path)
            uid, gender, tweets = obj.get("user_id"), obj.get("gender"), obj.get("tweets")
            if not isinstance(uid, str) or not uid:
                raise ParseError("missing or empty user_id", line=lineno, path=path)
            if not isinstance(tweets, list) or not all(isinstance(t, str) for t in tweets):
                raise ParseError("tweets must be a list of strings", line=lineno, path=path)
            if gender not in GENDERS:
                raise ParseError(f"unknown gender value {gender!r}", line=lineno, path=path)
            if not tweets:
                raise ParseError(f"user {uid!r} has no tweets", line=lineno, path=path)
            if uid in seen:
                raise ParseError(f"duplicate user_id {uid!r} (first seen on line {seen[uid]})",
                                 line=lineno, path=path)
            seen[uid] = lineno
            if normalize:
                tweets = [normalize_text(t) for t in tweets]
            users.append(UserRecord(uid, gender, tuple(tweets), language))
    return Corpus(language, tuple(users))


def write_corpus(corpus: Corpus, path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for u in corpus.users:
            fh.write(json.dumps({"user_id": u.user_id, "gender": u.gender,
                                 "tweets": list(u.tweets)}, ensure_ascii=False))
            fh.write("\n")


def balance_downsample(corpus: Corpus, seed: int) -> Corpus:
    """Drop randomly chosen majority-class users until both genders are equally frequent.

    Survivors keep their original order.
    """
    by_gender = {g: [i for i, u in enumerate(corpus.users) if u.gender == g] for g in GENDERS}
    if not by_gender["F"] or not by_gender["M"]:
        raise ValidationError("cannot balance: one gender is absent from the corpus")
    n = min(len(v) for v in by_gender.values())
    rng = np.random.default_rng(seed)
    keep = set()
    for g in GENDERS:
        idx = by_gender[g]
        if len(idx) == n:
            keep.update(idx)
        else:
            chosen = rng.choice(len(idx), size=n, replace=False)
            keep.update(idx[j] for j in chosen)
    return corpus.subset(sorted(keep))


def cap_tweets(corpus: Corpus, k: int) -> Corpus:
    if k < 1:
        raise ValidationError(f"tweet cap must be >= 1, got {k}")
    return Corpus(corpus.language,
                  tuple(replace(u, tweets=u.tweets[:k]) for u in corpus.users))


def stratified_kfold(corpus: Corpus, k: int, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Seeded stratified k-fold split over users.

    Returns ``k`` pairs of sorted ``(train_indices, test_indices)``.
    """
    if k < 2:
        raise ValidationError(f"need at least 2 folds, got {k}")
    by_gender = {g: [i for i, u in enumerate(corpus.users) if u.gender == g] for g in GENDERS}
    for g, idx in by_gender.items():
        if len(idx) < k:
            raise ValidationError(f"too few users: gender {g} has {len(idx)} users for {k} folds")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(len(corpus), dtype=np.int64)
    offset = 0
    for g in GENDERS:
        idx = np.asarray(by_gender[g])
        idx = idx[rng.permutation(len(idx))]
        # continue the round-robin where the previous gender stopped so fold sizes stay even
        fold_of[idx] = (np.arange(len(idx)) + offset) % k
        offset = (offset + len(idx)) % k
    all_idx = np.arange(len(corpus))
    return [(all_idx[fold_of != f], all_idx[fold_of == f]) for f in range(k)]


def normalize_corpus(corpus: Corpus) -> Corpus:
    return Corpus(corpus.language,
                  tuple(replace(u, tweets=tuple(normalize_text(t) for t in u.tweets))
                        for u in corpus.users))
