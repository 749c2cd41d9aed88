"""Multilingual embedding baseline.

Monolingual word vectors are mapped into a shared space with an orthogonal
Procrustes fit on a pseudo-dictionary of identically spelled words. A user is
then represented by the mean, max and standard deviation of their token
vectors plus the fraction of tokens that had a vector.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .bleach import tokenize
from .errors import ParseError, ValidationError

log = logging.getLogger(__name__)

MAX_DICTIONARY = 50_000


@dataclass(frozen=True)
class EmbeddingTable:
    words: tuple[str, ...]
    vectors: np.ndarray
    language: str = ""
    index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        vecs = np.asarray(self.vectors, dtype=np.float64)
        if vecs.ndim != 2 or vecs.shape[0] != len(self.words):
            raise ValidationError("vectors must be a (n_words, dim) matrix")
        if not np.all(np.isfinite(vecs)):
            raise ValidationError("embedding vectors must be finite")
        object.__setattr__(self, "words", tuple(self.words))
        object.__setattr__(self, "vectors", vecs)
        object.__setattr__(self, "index", {w: i for i, w in enumerate(self.words)})
        if len(self.index) != len(self.words):
            raise ValidationError("duplicate words in embedding table")

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self):
        return len(self.words)

    def __contains__(self, word):
        return word in self.index

    def __getitem__(self, word) -> np.ndarray:
        return self.vectors[self.index[word]]

    def mapped(self, W: np.ndarray) -> "EmbeddingTable":
        return EmbeddingTable(self.words, self.vectors @ W, self.language)


def load_embeddings(path, language: str = "") -> EmbeddingTable:
    """Read the word2vec text format: a ``"V d"`` header, then ``word v1 ... vd`` rows.

    Rows are kept in file order (word2vec files are sorted by frequency). A
    repeated word keeps its last vector but its first position.
    """
    path = Path(path)
    words: list[str] = []
    rows: list[np.ndarray] = []
    pos: dict[str, int] = {}
    duplicates = 0
    with path.open(encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ParseError("expected a 'V d' header", line=1, path=path)
        try:
            _, dim = int(header[0]), int(header[1])
        except ValueError:
            raise ParseError("expected a 'V d' header", line=1, path=path) from None
        for lineno, line in enumerate(fh, start=2):
            parts = line.rstrip("\n").rstrip(" ").split(" ")
            if parts == [""]:
                continue
            if len(parts) != dim + 1:
                raise ParseError(f"expected {dim} values, found {len(parts) - 1}", line=lineno, path=path)
            try:
                vec = np.array([float(v) for v in parts[1:]])
            except ValueError:
                raise ParseError("non-numeric vector entry", line=lineno, path=path) from None
            word = parts[0]
            if word in pos:
                duplicates += 1
                rows[pos[word]] = vec
            else:
                pos[word] = len(words)
                words.append(word)
                rows.append(vec)
    if not words:
        raise ParseError("embedding file has an empty vocabulary", path=path)
    if duplicates:
        log.warning("%s: %d duplicate word(s); kept the last vector of each", path, duplicates)
    return EmbeddingTable(tuple(words), np.vstack(rows), language)


def save_embeddings(table: EmbeddingTable, path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write(f"{len(table)} {table.dim}\n")
        for word, vec in zip(table.words, table.vectors):
            fh.write(word + " " + " ".join("%.17g" % v for v in vec) + "\n")


def build_pseudo_dictionary(src: EmbeddingTable, tgt: EmbeddingTable,
                            max_size: int = MAX_DICTIONARY) -> list[tuple[str, str]]:
    """Pairs of identically spelled words, lexicographically ordered.

    If more than ``max_size`` words are shared, the most frequent ones (by
    worst rank across the two files) are kept.
    """
    if not len(src) or not len(tgt):
        raise ValidationError("embedding tables must be non-empty")
    shared = [w for w in src.words if w in tgt.index]
    if not shared:
        raise ValidationError("no identically spelled words shared by the two vocabularies")
    if len(shared) > max_size:
        shared = sorted(shared, key=lambda w: (max(src.index[w], tgt.index[w]), w))[:max_size]
    return [(w, w) for w in sorted(shared)]


def normalize_rows(M: np.ndarray) -> np.ndarray:
    """Unit length, mean-center, unit length again."""
    def unit(A):
        n = np.linalg.norm(A, axis=1, keepdims=True)
        n[n == 0] = 1.0
        return A / n
    M = unit(M)
    M = M - M.mean(axis=0)
    return unit(M)


def procrustes(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Orthogonal W minimizing ``||X W - Y||_F``.

    Each singular-vector pair is sign-flipped so that the first nonzero entry
    of the left vector is positive; this only matters when ``X^T Y`` is rank
    deficient and the optimum is not unique.
    """
    M = X.T @ Y
    U, s, Vt = np.linalg.svd(M)
    for k in range(U.shape[1]):
        nz = np.flatnonzero(np.abs(U[:, k]) > 1e-12)
        if nz.size and U[nz[0], k] < 0:
            U[:, k] *= -1
            Vt[k, :] *= -1
    tol = s.max(initial=0.0) * max(M.shape) * np.finfo(float).eps
    rank = int(np.sum(s > tol))
    if rank < M.shape[0]:
        log.warning("cross-covariance has rank %d < %d; the orthogonal map is not unique",
                    rank, M.shape[0])
    return U @ Vt


def align(src: EmbeddingTable, tgt: EmbeddingTable, pairs: Sequence[tuple[str, str]],
          normalize: bool = True) -> np.ndarray:
    """Fit the orthogonal map taking ``src`` vectors to ``tgt`` space."""
    if src.dim != tgt.dim:
        raise ValidationError(f"dimension mismatch: {src.dim} vs {tgt.dim}")
    pairs = sorted(set(pairs))
    pairs = [(a, b) for a, b in pairs if a in src.index and b in tgt.index]
    if len(pairs) < 2:
        raise ValidationError("need at least two dictionary pairs present in both tables")
    if len(pairs) < src.dim:
        log.warning("only %d dictionary pairs for dimension %d", len(pairs), src.dim)
    X = np.vstack([src[a] for a, _ in pairs])
    Y = np.vstack([tgt[b] for _, b in pairs])
    if normalize:
        X, Y = normalize_rows(X), normalize_rows(Y)
    return procrustes(X, Y)


def save_alignment(W: np.ndarray, path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write(f"{W.shape[0]}\n")
        for row in W:
            fh.write(" ".join("%.17g" % v for v in row) + "\n")


def load_alignment(path) -> np.ndarray:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").split("\n")
    try:
        d = int(lines[0])
    except ValueError:
        raise ParseError("first line must be the dimension", line=1, path=path) from None
    rows = []
    for k in range(1, d + 1):
        vals = lines[k].split() if k < len(lines) else []
        if len(vals) != d:
            raise ParseError(f"expected {d} values", line=k + 1, path=path)
        rows.append([float(v) for v in vals])
    return np.array(rows)


@dataclass(frozen=True)
class UserEmbedding:
    mean: np.ndarray
    max: np.ndarray
    std: np.ndarray
    coverage: float

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.mean, self.max, self.std, [self.coverage]])


def user_embedding(tweets: Iterable[str], table: EmbeddingTable,
                   alignment: np.ndarray | None = None) -> UserEmbedding:
    tokens = [t for tweet in tweets for t in tokenize(tweet)]
    hits = [table.index[t] for t in tokens if t in table.index]
    d = table.dim
    if not hits:
        z = np.zeros(d)
        return UserEmbedding(z, z.copy(), z.copy(), 0.0)
    V = table.vectors[hits]
    if alignment is not None:
        V = V @ alignment
    return UserEmbedding(V.mean(axis=0), V.max(axis=0), V.std(axis=0), len(hits) / len(tokens))
