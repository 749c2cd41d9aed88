"""Bleaching: per-token abstract representations of raw text.

Six channels are available. ``ALL_ABS`` is their combination.

=========  ===========================================================
freq       order-of-magnitude bin of the token's training frequency
len        ``0`` + character count
punctc     alphanumeric runs -> ``W``, everything else verbatim
puncta     like punctc, but emoji -> ``J``, emoticons -> ``E``, punctuation -> ``P``
shape      ``U``/``L``/``D``/``X`` per character, runs capped at 2
vowels     ``V`` for aeiou, ``C`` for other letters, ``O`` otherwise
=========  ===========================================================
"""
from __future__ import annotations

import bisect
import enum
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Iterable

from .errors import ConfigurationError

BOUNDARY = "\u27c2"  # emitted between tweets in every channel
PLACEHOLDERS = frozenset({"USER", "URL"})


class Channel(str, enum.Enum):
    Frequency = "freq"
    Length = "len"
    PunctC = "punctc"
    PunctA = "puncta"
    Shape = "shape"
    Vowels = "vowels"

    def __str__(self):
        return self.value


CHANNEL_ORDER = tuple(Channel)
ALL_ABS = frozenset(Channel)


def parse_channels(text: str) -> frozenset[Channel]:
    """Parse ``"all"`` or a comma list such as ``"shape,puncta"``."""
    names = [t.strip().lower() for t in text.split(",") if t.strip()]
    if not names:
        raise ConfigurationError("no channels given")
    out = set()
    for name in names:
        if name in ("all", "allabs"):
            out.update(ALL_ABS)
            continue
        try:
            out.add(Channel(name))
        except ValueError:
            raise ConfigurationError(f"unknown channel {name!r}; expected one of "
                                     f"{', '.join(c.value for c in Channel)} or all") from None
    return frozenset(out)


def ordered(channels: Iterable[Channel]) -> list[Channel]:
    s = set(channels)
    return [c for c in CHANNEL_ORDER if c in s]


# -- character classes ------------------------------------------------------

@lru_cache(maxsize=1)
def _emoji_ranges() -> tuple[list[int], list[int]]:
    starts, ends = [], []
    text = resources.files("bleachtext").joinpath("data/emoji_presentation.txt").read_text("utf-8")
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        cps = line.split(";")[0].strip()
        lo, _, hi = cps.partition("..")
        starts.append(int(lo, 16))
        ends.append(int(hi or lo, 16))
    return starts, ends


def has_emoji_presentation(ch: str) -> bool:
    starts, ends = _emoji_ranges()
    cp = ord(ch)
    i = bisect.bisect_right(starts, cp) - 1
    return i >= 0 and cp <= ends[i]


_VS16 = "\ufe0f"
_EMOJI_JOINERS = frozenset({"\ufe0f", "\ufe0e", "\u200d", "\u20e3"})


def is_emoji_at(token: str, i: int) -> bool:
    ch = token[i]
    if has_emoji_presentation(ch):
        return True
    return i + 1 < len(token) and token[i + 1] == _VS16 and ch not in _EMOJI_JOINERS


def is_alnum(ch: str) -> bool:
    return unicodedata.category(ch)[0] in "LN"


_EYES = r"[:;8=xX]"
_NOSE = r"[\-o*']"
_MOUTH = r"[)(\]\[dDpP/\\:}{@|]"
EMOTICON_RE = re.compile(
    rf"""
    (?:
      [<>]? {_EYES} {_NOSE}? (?P<m1>{_MOUTH})(?P=m1)*     # :-)  ;)))  >:(
    | (?P<m2>{_MOUTH})(?P=m2)* {_NOSE}? {_EYES} [<>]?     # (-:  ((:
    | </?3                                                # <3  </3
    )
    """,
    re.VERBOSE,
)


def match_emoticon(token: str, i: int) -> int:
    """Length of the longest emoticon starting at ``token[i]``, or 0.

    An emoticon may not continue an alphanumeric run, and one ending in an
    alphanumeric character (``:D``, ``<3``) may not run into another one.
    """
    if i > 0 and is_alnum(token[i - 1]):
        return 0
    m = EMOTICON_RE.match(token, i)
    if not m:
        return 0
    end = m.end()
    if is_alnum(token[end - 1]) and end < len(token) and is_alnum(token[end]):
        return 0
    # reversed letter-only forms ("px", "Dx") are ordinary words
    if m.group("m2") and all(is_alnum(c) for c in token[i:end]):
        return 0
    return end - i


# -- tokenization and frequency ----------------------------------------------

def tokenize(text: str) -> list[str]:
    return text.split()


@dataclass(frozen=True)
class FrequencyTable:
    """Token counts over the training split.

    ``provenance`` records which users contributed, so evaluation code can
    verify that no test user was counted.
    """
    counts: dict[str, int]
    provenance: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if any(c < 1 for c in self.counts.values()):
            raise ConfigurationError("frequency counts must be >= 1")

    @classmethod
    def from_texts(cls, texts: Iterable[str], provenance=frozenset()) -> "FrequencyTable":
        counts = Counter()
        for t in texts:
            counts.update(tokenize(t))
        return cls(dict(counts), frozenset(provenance))

    @classmethod
    def from_users(cls, users) -> "FrequencyTable":
        users = list(users)
        return cls.from_texts((t for u in users for t in u.tweets),
                              provenance=frozenset(u.key for u in users))

    def count(self, token: str) -> int:
        return self.counts.get(token, 0)


def freq_bin(count: int) -> str:
    if count < 0:
        raise ValueError("count must be non-negative")
    return str(len(str(count))) if count else "0"


# -- channel transforms ------------------------------------------------------

def bleach_frequency(tokens: list[str], table: FrequencyTable) -> list[str]:
    return [freq_bin(table.count(t)) for t in tokens]


def bleach_length(tokens: list[str]) -> list[str]:
    return ["0" + str(len(t)) for t in tokens]


def bleach_punct_c(token: str) -> str:
    out = []
    in_word = False
    for ch in token:
        if is_alnum(ch):
            if not in_word:
                out.append("W")
            in_word = True
        else:
            out.append(ch)
            in_word = False
    return "".join(out)


def bleach_punct_a(token: str) -> str:
    out = []
    i, n = 0, len(token)
    while i < n:
        if is_emoji_at(token, i):
            out.append("J")
            i += 1
            # variation selectors, ZWJ and keycaps belong to the preceding emoji
            while i < n and token[i] in _EMOJI_JOINERS:
                i += 1
            continue
        m = match_emoticon(token, i)
        if m:
            out.append("E")
            i += m
            continue
        if is_alnum(token[i]):
            out.append("W")
            while i < n and is_alnum(token[i]):
                i += 1
            continue
        out.append("P")
        i += 1
    return "".join(out)


def _shape_char(ch: str) -> str:
    if ch.isdigit():
        return "D"
    if ch.isupper():
        return "U"
    if ch.islower():
        return "L"
    return "X"


def bleach_shape(token: str) -> str:
    out = []
    for ch in token:
        s = _shape_char(ch)
        if len(out) >= 2 and out[-1] == s and out[-2] == s:
            continue
        out.append(s)
    return "".join(out)


_VOWELS = frozenset("aeiouAEIOU")


def bleach_vowels(token: str) -> str:
    return "".join("V" if ch in _VOWELS else "C" if ch.isalpha() else "O" for ch in token)


_TOKEN_TRANSFORMS = {
    Channel.PunctC: bleach_punct_c,
    Channel.PunctA: bleach_punct_a,
    Channel.Shape: bleach_shape,
    Channel.Vowels: bleach_vowels,
}


def bleach_tokens(tokens: list[str], channel: Channel, table: FrequencyTable | None = None) -> list[str]:
    """Apply one channel to a token list.

    In the two punctuation channels the ``USER``/``URL`` placeholders are kept
    as they are, so a mention stays distinguishable from an ordinary word.
    """
    if channel is Channel.Frequency:
        if table is None:
            raise ConfigurationError("the freq channel needs a frequency table")
        return bleach_frequency(tokens, table)
    if channel is Channel.Length:
        return bleach_length(tokens)
    fn = _TOKEN_TRANSFORMS[channel]
    if channel in (Channel.PunctC, Channel.PunctA):
        return [t if t in PLACEHOLDERS else fn(t) for t in tokens]
    return [fn(t) for t in tokens]


@dataclass(frozen=True)
class BleachedDoc:
    channels: dict[Channel, list[str]]

    def __getitem__(self, channel: Channel) -> list[str]:
        return self.channels[channel]

    def __contains__(self, channel) -> bool:
        return channel in self.channels


def bleach_document(tweets: Iterable[str], channels: Iterable[Channel],
                    table: FrequencyTable | None = None) -> BleachedDoc:
    channels = ordered(channels)
    if Channel.Frequency in channels and table is None:
        raise ConfigurationError("the freq channel needs a frequency table")
    seqs: dict[Channel, list[str]] = {c: [] for c in channels}
    for k, tweet in enumerate(tweets):
        tokens = tokenize(tweet)
        for c in channels:
            if k:
                seqs[c].append(BOUNDARY)
            seqs[c].extend(bleach_tokens(tokens, c, table))
    return BleachedDoc(seqs)
