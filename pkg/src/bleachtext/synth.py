"""Seeded synthetic corpora with controllable lexical and stylistic gender signal.

Each pseudo-language has its own consonant inventory, word template, emoji
set and exclamation glyph (xd and xe use Greek and Cyrillic consonants),
so two languages share no words and no
emoji/exclamation characters. What they share is *style*: F users who carry
the style markers sprinkle emoji at a fixed per-token rate and end tweets
with exclamation runs, the same way in every language. Lexical signal comes
from gender-preferred words inside each language, which cannot transfer.
"""
from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

from .corpus import Corpus, UserRecord

VOWELS = "aeiou"


@dataclass(frozen=True)
class LanguageProfile:
    name: str
    consonants: str
    template: str
    emoji: tuple[str, ...]
    exclaim: str


PROFILES = {
    "xa": LanguageProfile("xa", "bdgkmn", "CVC",
                          tuple(chr(c) for c in range(0x1F600, 0x1F608)), "!"),
    "xb": LanguageProfile("xb", "ptfsrl", "CVCV",
                          tuple(chr(c) for c in range(0x1F436, 0x1F43E)), "！"),
    "xc": LanguageProfile("xc", "vzhjwy", "CCVC",
                          tuple(chr(c) for c in range(0x1F338, 0x1F340)), "\u00a1"),
    "xd": LanguageProfile("xd", "\u03b2\u03b3\u03b4\u03b6\u03b8\u03ba", "VCV",
                          tuple(chr(c) for c in range(0x1F680, 0x1F688)), "\ufe57"),
    "xe": LanguageProfile("xe", "\u0431\u0432\u0433\u0434\u0436\u0437", "CVCCV",
                          tuple(chr(c) for c in range(0x1F34E, 0x1F356)), "\u055c"),
}


@dataclass(frozen=True)
class SynthConfig:
    n_users: int = 200
    tweets_per_user: int = 50
    vocab_size: int = 400
    words_per_tweet: tuple[int, int] = (4, 12)
    # style: F users carrying markers (share given by style_fraction)
    emoji_rate: float = 0.3
    exclaim_rate: float = 0.5
    baseline_emoji_rate: float = 0.02
    baseline_exclaim_rate: float = 0.05
    style_fraction: float = 0.8
    # lexical: chance a word is drawn from the user's gender-preferred list
    lexical_rate: float = 0.1
    n_gender_words: int = 25
    mention_rate: float = 0.3
    url_rate: float = 0.1


PRESETS = {
    # style markers only; languages differ in everything lexical
    "transfer": SynthConfig(lexical_rate=0.0, style_fraction=1.0),
    # strong lexical cue on top of a weaker style cue
    "mixed": SynthConfig(lexical_rate=0.3, style_fraction=0.9),
}


def _seed_for(seed: int, language: str) -> np.random.Generator:
    return np.random.default_rng([seed, zlib.crc32(language.encode("utf-8"))])


def _make_lexicon(profile: LanguageProfile, size: int, rng) -> list[str]:
    cons = list(profile.consonants)
    words: list[str] = []
    seen = set()
    tries = 0
    while len(words) < size:
        w = "".join(cons[rng.integers(len(cons))] if c == "C" else VOWELS[rng.integers(5)]
                    for c in profile.template)
        tries += 1
        if w not in seen:
            seen.add(w)
            words.append(w)
        elif tries > 100 * size:
            break
    return words


def generate_corpus(profile: LanguageProfile | str, seed: int,
                    cfg: SynthConfig = SynthConfig()) -> Corpus:
    """Balanced corpus of ``cfg.n_users`` users, alternating F and M."""
    if isinstance(profile, str):
        profile = PROFILES[profile]
    rng = _seed_for(seed, profile.name)
    lexicon = _make_lexicon(profile, cfg.vocab_size, rng)
    zipf_cdf = np.cumsum(1.0 / np.arange(1, len(lexicon) + 1))
    zipf_cdf /= zipf_cdf[-1]
    pool = rng.permutation(len(lexicon))
    gender_words = {
        "F": [lexicon[i] for i in pool[:cfg.n_gender_words]],
        "M": [lexicon[i] for i in pool[cfg.n_gender_words:2 * cfg.n_gender_words]],
    }
    handle_chars = profile.consonants + VOWELS + "0123456789_"

    users = []
    for u in range(cfg.n_users):
        gender = "F" if u % 2 == 0 else "M"
        styled = gender == "F" and rng.random() < cfg.style_fraction
        emoji_rate = cfg.emoji_rate if styled else cfg.baseline_emoji_rate
        exclaim_rate = cfg.exclaim_rate if styled else cfg.baseline_exclaim_rate
        tweets = []
        for _ in range(cfg.tweets_per_user):
            lo, hi = cfg.words_per_tweet
            tokens = []
            if rng.random() < cfg.mention_rate:
                n = int(rng.integers(3, 9))
                tokens.append("@" + "".join(handle_chars[rng.integers(len(handle_chars))] for _ in range(n)))
            for _ in range(int(rng.integers(lo, hi + 1))):
                if rng.random() < cfg.lexical_rate:
                    words = gender_words[gender]
                    tokens.append(words[rng.integers(len(words))])
                else:
                    tokens.append(lexicon[min(int(np.searchsorted(zipf_cdf, rng.random())), len(lexicon) - 1)])
                if rng.random() < emoji_rate:
                    tokens.append(profile.emoji[rng.integers(len(profile.emoji))])
            if rng.random() < exclaim_rate:
                tokens[-1] += profile.exclaim * int(rng.integers(2, 4))
            if rng.random() < cfg.url_rate:
                tokens.append("http://t.co/" + "".join(handle_chars[rng.integers(len(handle_chars))]
                                                      for _ in range(6)))
            tweets.append(" ".join(tokens))
        users.append(UserRecord(f"{profile.name}{u:05d}", gender, tuple(tweets), profile.name))
    return Corpus(profile.name, tuple(users))
