"""L2-regularized linear SVM (squared hinge loss) trained by dual coordinate descent.

The objective is::

    0.5 * (|w|^2 + b^2) + C * sum_i max(0, 1 - y_i (w . x_i + b))^2

The bias is an extra constant feature and is regularized like any other
weight. Labels are ``+1`` for F and ``-1`` for M.
"""
from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _kernels
from .bleach import FrequencyTable
from .errors import (ChecksumError, ModelFileError, TruncatedModelError,
                     ValidationError, VersionError)
from .features import FeatureSpec, SparseVector, Vocabulary

log = logging.getLogger(__name__)

LABEL_MAP = {-1: "M", +1: "F"}
_SIGN = {"F": 1.0, "M": -1.0, 1: 1.0, -1: -1.0}

FORMAT_VERSION = 1
_MAGIC = b"BLEACHTEXT-MODEL"


@dataclass(frozen=True)
class TrainerConfig:
    C: float = 1.0
    loss: str = "squared_hinge"
    tol: float = 1e-4
    max_iter: int = 1000
    seed: int = 0

    def __post_init__(self):
        if not self.C > 0:
            raise ValidationError(f"C must be > 0, got {self.C}")
        if not self.tol > 0:
            raise ValidationError(f"tol must be > 0, got {self.tol}")
        if self.max_iter < 1:
            raise ValidationError("max_iter must be >= 1")
        if self.loss != "squared_hinge":
            raise ValidationError(f"unsupported loss {self.loss!r}")


@dataclass
class CSR:
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    n_features: int

    @classmethod
    def from_vectors(cls, X: Sequence[SparseVector], n_features: int | None = None) -> "CSR":
        lengths = np.fromiter((len(x) for x in X), dtype=np.int64, count=len(X))
        indptr = np.zeros(len(X) + 1, dtype=np.int64)
        np.cumsum(lengths, out=indptr[1:])
        if len(X):
            indices = np.concatenate([x.indices for x in X]).astype(np.int64)
            data = np.concatenate([x.values for x in X]).astype(np.float64)
        else:
            indices, data = np.empty(0, np.int64), np.empty(0)
        if n_features is None:
            n_features = int(indices.max()) + 1 if indices.size else 0
        if indices.size and (indices.min() < 0 or indices.max() >= n_features):
            raise ValidationError("feature index out of range")
        if not np.all(np.isfinite(data)):
            raise ValidationError("non-finite feature value")
        return cls(indptr, indices, data, n_features)

    @property
    def n_rows(self) -> int:
        return len(self.indptr) - 1

    def row_sqnorms(self) -> np.ndarray:
        sq = self.data * self.data
        out = np.zeros(self.n_rows)
        nonempty = self.indptr[1:] > self.indptr[:-1]
        if sq.size:
            out[nonempty] = np.add.reduceat(sq, self.indptr[:-1][nonempty])
        return out


def encode_labels(y) -> np.ndarray:
    try:
        return np.array([_SIGN[v] for v in y], dtype=np.float64)
    except KeyError as exc:
        raise ValidationError(f"unknown label {exc.args[0]!r}; expected F/M or +1/-1") from None


def primal_objective(w: np.ndarray, bias: float, X: CSR, y: np.ndarray, C: float,
                     use_numba=None) -> float:
    wb = np.append(w, bias)
    _, margins_fn = _kernels.get_backend(use_numba)
    m = margins_fn(X.indptr, X.indices, X.data, wb)
    xi = np.maximum(0.0, 1.0 - y * m)
    return 0.5 * float(np.dot(wb, wb)) + C * float(np.dot(xi, xi))


@dataclass
class LinearModel:
    weights: np.ndarray
    bias: float
    trainer_config: TrainerConfig = field(default_factory=TrainerConfig)
    spec: FeatureSpec | None = None
    vocab: Vocabulary | None = None
    freq_table: FrequencyTable | None = None
    history: list = field(default_factory=list, repr=False)
    gaps: list = field(default_factory=list, repr=False)
    epochs: int = 0
    converged: bool = True
    provenance: frozenset = field(default_factory=frozenset, repr=False)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = float(self.bias)
        if not np.all(np.isfinite(self.weights)) or not np.isfinite(self.bias):
            raise ValidationError("model weights must be finite")
        if self.vocab is not None and len(self.vocab) != len(self.weights):
            raise ValidationError("weight vector length differs from vocabulary size")

    @property
    def n_features(self) -> int:
        return len(self.weights)

    def feature_names(self) -> tuple[str, ...]:
        if self.vocab is not None:
            return self.vocab.features
        return tuple(f"f{i}" for i in range(self.n_features))

    def decision_many(self, X: Sequence[SparseVector]) -> np.ndarray:
        csr = CSR.from_vectors(X, self.n_features)
        return _kernels.csr_margins_numpy(csr.indptr, csr.indices, csr.data,
                                          np.append(self.weights, self.bias))

    def predict_many(self, X: Sequence[SparseVector]) -> list[str]:
        return [LABEL_MAP[1] if s >= 0 else LABEL_MAP[-1] for s in self.decision_many(X)]


def dual_objective(alpha: np.ndarray, w_aug: np.ndarray, C: float) -> float:
    """Dual value ``sum(alpha) - |w|^2 / 2 - sum(alpha^2) / (4C)``; a lower bound on the primal optimum."""
    return float(alpha.sum() - 0.5 * np.dot(w_aug, w_aug) - np.dot(alpha, alpha) / (4.0 * C))


def train(X: Sequence[SparseVector], y, cfg: TrainerConfig = TrainerConfig(),
          n_features: int | None = None, use_numba=None) -> LinearModel:
    """Fit weights by dual coordinate descent with seeded example shuffling.

    Coordinate steps increase the dual monotonically but can make the primal
    objective oscillate, so the best primal iterate seen so far is kept and
    returned. Training stops once the relative duality gap of that iterate,
    ``(P(w_best) - D(alpha)) / P(w_best)``, drops to ``cfg.tol``; this bounds
    its distance from the optimum. ``model.history`` lists the returned
    iterate's objective after each epoch and never increases.
    """
    ys = encode_labels(y)
    if len(X) != len(ys) or len(ys) < 2:
        raise ValidationError("need at least two examples and one label per example")
    if len(set(ys.tolist())) < 2:
        raise ValidationError("training data contains a single class")
    csr = CSR.from_vectors(X, n_features)
    epoch_fn, _ = _kernels.get_backend(use_numba)

    diag = 0.5 / cfg.C
    qii = csr.row_sqnorms() + 1.0 + diag
    alpha = np.zeros(csr.n_rows)
    w = np.zeros(csr.n_features + 1)
    best_w = w.copy()
    best_obj = primal_objective(w[:-1], w[-1], csr, ys, cfg.C, use_numba)
    rng = np.random.default_rng(cfg.seed)
    history, gaps = [], []
    converged = False
    epoch = 0
    for epoch in range(1, cfg.max_iter + 1):
        perm = rng.permutation(csr.n_rows).astype(np.int64)
        epoch_fn(csr.indptr, csr.indices, csr.data, ys, qii, diag, alpha, w, perm)
        obj = primal_objective(w[:-1], w[-1], csr, ys, cfg.C, use_numba)
        if obj < best_obj:
            best_obj = obj
            best_w[:] = w
        history.append(best_obj)
        gap = (best_obj - dual_objective(alpha, w, cfg.C)) / best_obj
        gaps.append(gap)
        if gap <= cfg.tol:
            converged = True
            break
    if not converged:
        log.warning("dual coordinate descent stopped after %d epochs at relative gap %.3g (tol=%g)",
                    epoch, gaps[-1], cfg.tol)
    return LinearModel(best_w[:-1].copy(), float(best_w[-1]), cfg, history=history,
                       gaps=gaps, epochs=epoch, converged=converged)


def _check_vector(m: LinearModel, x: SparseVector) -> None:
    if len(x) and (x.indices[-1] >= m.n_features or x.indices[0] < 0):
        raise ValidationError(f"feature index out of range for a model with {m.n_features} features")


def decision(m: LinearModel, x: SparseVector) -> float:
    _check_vector(m, x)
    return float(np.dot(m.weights[x.indices], x.values)) + m.bias


def predict(m: LinearModel, x: SparseVector) -> str:
    """F when the decision value is >= 0 (ties go to F), else M."""
    return LABEL_MAP[1] if decision(m, x) >= 0 else LABEL_MAP[-1]


def top_features(m: LinearModel, k: int) -> tuple[list[tuple[str, float]], list[tuple[str, float]]]:
    """The ``k`` most F-indicative (largest) and most M-indicative (smallest) weights."""
    if k < 1:
        raise ValidationError("k must be >= 1")
    names = m.feature_names()
    pairs = list(zip(names, m.weights.tolist()))
    pos = sorted(pairs, key=lambda p: (-p[1], p[0]))[:k]
    neg = sorted(pairs, key=lambda p: (p[1], p[0]))[:k]
    return pos, neg


# -- serialization -----------------------------------------------------------

def _fmt(x: float) -> str:
    return "%.17g" % x


def _model_body(m: LinearModel) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "seed": m.trainer_config.seed,
        "spec": m.spec.to_dict() if m.spec is not None else None,
        "trainer_config": asdict(m.trainer_config),
        "vocabulary": None if m.vocab is None else {
            "features": list(m.vocab.features),
            "df": m.vocab.df.tolist(),
            "n_docs": m.vocab.n_docs,
        },
        "freq_table": None if m.freq_table is None else dict(sorted(m.freq_table.counts.items())),
        "weights": [_fmt(v) for v in m.weights.tolist()],
        "bias": _fmt(m.bias),
        "epochs": m.epochs,
        "converged": m.converged,
        # users whose text shaped the weights, vocabulary or frequency table
        "provenance": sorted(list(k) for k in _all_provenance(m)),
    }


def _all_provenance(m: LinearModel) -> frozenset:
    keys = set(m.provenance)
    if m.vocab is not None:
        keys |= m.vocab.provenance
    if m.freq_table is not None:
        keys |= m.freq_table.provenance
    return frozenset(tuple(k) if isinstance(k, list) else k for k in keys)


def dumps_model(m: LinearModel) -> bytes:
    body = json.dumps(_model_body(m), ensure_ascii=False, sort_keys=True,
                      separators=(",", ":")).encode("utf-8")
    digest = hashlib.sha256(body).hexdigest()
    header = b"%s %d %d sha256:%s\n" % (_MAGIC, FORMAT_VERSION, len(body), digest.encode())
    return header + body


def save_model(m: LinearModel, path) -> None:
    Path(path).write_bytes(dumps_model(m))


def loads_model(raw: bytes) -> LinearModel:
    head, nl, body = raw.partition(b"\n")
    if not head.startswith(_MAGIC):
        if not nl and _MAGIC.startswith(head):
            raise TruncatedModelError("model file ends inside its header")
        raise ModelFileError("not a bleachtext model file")
    if not nl:
        raise TruncatedModelError("model file ends inside its header")
    parts = head.split()
    if len(parts) != 4 or not parts[3].startswith(b"sha256:"):
        raise ModelFileError("malformed model header")
    try:
        version, length = int(parts[1]), int(parts[2])
    except ValueError:
        raise ModelFileError("malformed model header") from None
    if version > FORMAT_VERSION:
        raise VersionError(f"model format version {version} is newer than supported "
                           f"version {FORMAT_VERSION}; upgrade bleachtext")
    if version < 1:
        raise VersionError(f"unknown model format version {version}")
    if len(body) < length:
        raise TruncatedModelError(f"model body has {len(body)} of {length} bytes")
    if len(body) > length:
        raise ModelFileError("trailing data after model body")
    if hashlib.sha256(body).hexdigest().encode() != parts[3][len(b"sha256:"):]:
        raise ChecksumError("model checksum mismatch; file is corrupted")
    d = json.loads(body.decode("utf-8"))
    prov = frozenset(tuple(k) for k in d.get("provenance", ()))
    vocab = None
    if d["vocabulary"] is not None:
        v = d["vocabulary"]
        vocab = Vocabulary(tuple(v["features"]), np.array(v["df"], dtype=np.int64), v["n_docs"], prov)
    table = FrequencyTable(d["freq_table"], prov) if d["freq_table"] is not None else None
    return LinearModel(
        weights=np.array([float(s) for s in d["weights"]]),
        bias=float(d["bias"]),
        trainer_config=TrainerConfig(**d["trainer_config"]),
        spec=FeatureSpec.from_dict(d["spec"]) if d["spec"] is not None else None,
        vocab=vocab,
        freq_table=table,
        epochs=d.get("epochs", 0),
        converged=d.get("converged", True),
        provenance=prov,
    )


def load_model(path) -> LinearModel:
    return loads_model(Path(path).read_bytes())
