"""Experiment harness: in-language CV, cross-language transfer, feature report, agreement."""
from __future__ import annotations

import csv
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import Corpus, balance_downsample, cap_tweets, stratified_kfold
from .embed import EmbeddingTable, align, build_pseudo_dictionary, user_embedding
from .errors import ParseError, ValidationError
from .features import FeatureSpec, SparseVector
from .linear import LinearModel, TrainerConfig, top_features, train
from .pipeline import GramCache, check_hygiene, fit_model, predict_users

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExperimentConfig:
    spec: FeatureSpec = field(default_factory=FeatureSpec.abstract)
    trainer: TrainerConfig = field(default_factory=TrainerConfig)
    tweets_per_user: int = 200
    folds: int = 10
    seed: int = 0
    balance: bool = True

    def __post_init__(self):
        if self.folds < 2:
            raise ValidationError("folds must be >= 2")
        if self.tweets_per_user < 1:
            raise ValidationError("tweets_per_user must be >= 1")


def accuracy(pred: Sequence[str], gold: Sequence[str]) -> float:
    if len(pred) != len(gold):
        raise ValidationError(f"length mismatch: {len(pred)} predictions, {len(gold)} gold labels")
    if not gold:
        raise ValidationError("accuracy of an empty list is undefined")
    return sum(p == g for p, g in zip(pred, gold)) / len(gold)


def prepare(corpus: Corpus, cfg: ExperimentConfig) -> Corpus:
    if cfg.balance:
        corpus = balance_downsample(corpus, cfg.seed)
    return cap_tweets(corpus, cfg.tweets_per_user)


def evaluate_users(model: LinearModel, users, cache: GramCache | None = None) -> float:
    users = list(users)
    check_hygiene(model, users)
    return accuracy(predict_users(model, users, cache), [u.gender for u in users])


@dataclass
class CVResult:
    language: str
    fold_accuracies: list[float]

    @property
    def mean(self) -> float:
        return float(np.mean(self.fold_accuracies))


def run_cv(corpus: Corpus, cfg: ExperimentConfig, prepared: bool = False) -> CVResult:
    """Stratified k-fold CV; every fold refits frequency table and vocabulary on its train users."""
    if not prepared:
        corpus = prepare(corpus, cfg)
    cache = GramCache(cfg.spec)
    accs = []
    for k, (tr, te) in enumerate(stratified_kfold(corpus, cfg.folds, cfg.seed)):
        train_users = [corpus.users[i] for i in tr]
        test_users = [corpus.users[i] for i in te]
        model = fit_model(train_users, cfg.spec, cfg.trainer, cache)
        accs.append(evaluate_users(model, test_users, cache))
        log.info("%s fold %d: %.3f", corpus.language, k, accs[-1])
    return CVResult(corpus.language, accs)


def _check_languages(sources: Sequence[Corpus], target: Corpus) -> None:
    if not sources:
        raise ValidationError("need at least one source corpus")
    langs = [s.language for s in sources]
    if target.language in langs:
        raise ValidationError(f"target language {target.language!r} is also a source")
    if len(set(langs)) != len(langs):
        raise ValidationError("duplicate source languages")


def run_cross_pair(source: Corpus, target: Corpus, cfg: ExperimentConfig, prepared=False) -> float:
    if not prepared:
        source, target = prepare(source, cfg), prepare(target, cfg)
    model = fit_model(source.users, cfg.spec, cfg.trainer)
    return evaluate_users(model, target.users)


@dataclass
class CrossAvgResult:
    target: str
    pairs: dict[str, float]

    @property
    def mean(self) -> float:
        return float(np.mean(list(self.pairs.values())))


def run_cross_avg(sources: Sequence[Corpus], target: Corpus, cfg: ExperimentConfig) -> CrossAvgResult:
    """One model per source language, each tested on the whole target; unweighted mean."""
    _check_languages(sources, target)
    tgt = prepare(target, cfg)
    pairs = {}
    for src in sources:
        pairs[src.language] = run_cross_pair(prepare(src, cfg), tgt, cfg, prepared=True)
    return CrossAvgResult(target.language, pairs)


def run_cross_all(sources: Sequence[Corpus], target: Corpus, cfg: ExperimentConfig) -> float:
    """One model on the concatenation of all sources (joint frequency table and vocabulary)."""
    _check_languages(sources, target)
    train_users = [u for src in sources for u in prepare(src, cfg).users]
    model = fit_model(train_users, cfg.spec, cfg.trainer)
    return evaluate_users(model, prepare(target, cfg).users)


def pairwise_matrix(corpora: Sequence[Corpus], cfg: ExperimentConfig) -> dict[tuple[str, str], float]:
    """Accuracy of every source model on every other language, keyed ``(source, target)``."""
    prepared = [prepare(c, cfg) for c in corpora]
    out = {}
    for src in prepared:
        model = fit_model(src.users, cfg.spec, cfg.trainer)
        for tgt in prepared:
            if tgt.language != src.language:
                out[(src.language, tgt.language)] = evaluate_users(model, tgt.users)
    return out


def column_means(matrix: dict[tuple[str, str], float]) -> dict[str, float]:
    """The "Avg" row: mean over source models for each target language."""
    cols = defaultdict(list)
    for (_, tgt), acc in sorted(matrix.items()):
        cols[tgt].append(acc)
    return {t: float(np.mean(v)) for t, v in cols.items()}


# -- embedding baseline ----------------------------------------------------------

def embedding_vectors(corpus: Corpus, table: EmbeddingTable, W=None) -> list[SparseVector]:
    return [SparseVector.from_dense(user_embedding(u.tweets, table, W).as_vector()) for u in corpus.users]


def run_embeds_all(sources: Sequence[Corpus], target: Corpus, tables: dict[str, EmbeddingTable],
                   cfg: ExperimentConfig) -> float:
    """Embedding baseline in the All setting; every language is mapped into the target's space."""
    _check_languages(sources, target)
    pivot = tables[target.language]
    X, y = [], []
    for src in sources:
        table = tables[src.language]
        W = align(table, pivot, build_pseudo_dictionary(table, pivot))
        src = prepare(src, cfg)
        X += embedding_vectors(src, table, W)
        y += src.labels
    model = train(X, y, cfg.trainer)
    tgt = prepare(target, cfg)
    return accuracy(model.predict_many(embedding_vectors(tgt, pivot)), tgt.labels)


# -- feature report -----------------------------------------------------------

@dataclass
class RankedFeature:
    feature: str
    languages: int
    mean_abs_weight: float


def top_feature_report(models: Sequence[LinearModel], k: int = 20) -> dict[str, list[RankedFeature]]:
    """Rank features by the number of models whose top-k (per gender) contains them.

    Ties are broken by mean absolute weight over those models, then by name.
    """
    if not models:
        raise ValidationError("need at least one model")
    specs = {repr(sorted(m.spec.to_dict().items())) if m.spec else None for m in models}
    if len(specs) != 1:
        raise ValidationError("models were trained with different feature specs")
    report = {}
    for side, gender in ((0, "F"), (1, "M")):
        hits: dict[str, list[float]] = defaultdict(list)
        for m in models:
            for feat, w in top_features(m, k)[side]:
                hits[feat].append(abs(w))
        ranked = [RankedFeature(f, len(ws), float(np.mean(ws))) for f, ws in hits.items()]
        ranked.sort(key=lambda r: (-r.languages, -r.mean_abs_weight, r.feature))
        report[gender] = ranked
    return report


# -- agreement ---------------------------------------------------------------

def fleiss_kappa(counts) -> float:
    """Fleiss' kappa for an items x categories matrix of rating counts.

    Every row must sum to the same number of raters ``n >= 2``. When all
    ratings fall in a single category the chance agreement is 1 and kappa is
    undefined; 1.0 is returned with a warning.
    """
    M = np.asarray(counts, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] < 1:
        raise ValidationError("ratings must be a non-empty items x categories matrix")
    if M.shape[1] < 2:
        raise ValidationError("need at least two categories")
    if np.any(M < 0) or np.any(M != np.round(M)):
        raise ValidationError("rating counts must be non-negative integers")
    n_per_item = M.sum(axis=1)
    n = n_per_item[0]
    if np.any(n_per_item != n):
        raise ValidationError("every item must have the same number of ratings")
    if n < 2:
        raise ValidationError("need at least two raters per item")
    N = M.shape[0]
    p_item = (np.sum(M * M, axis=1) - n) / (n * (n - 1))
    p_bar = p_item.mean()
    p_cat = M.sum(axis=0) / (N * n)
    p_e = float(np.sum(p_cat * p_cat))
    if p_e == 1.0:
        log.warning("all ratings fall in one category; kappa defined as 1.0")
        return 1.0
    return float((p_bar - p_e) / (1.0 - p_e))


def load_annotations(path) -> tuple[np.ndarray, list[str], list[str]]:
    """Read ``item_id<TAB>rater_id<TAB>label`` rows (with a header) into a count matrix.

    Returns ``(counts, item_ids, categories)``; items and categories are sorted.
    """
    path = Path(path)
    per_item: dict[str, dict[str, str]] = defaultdict(dict)
    with path.open(encoding="utf-8", newline="") as fh:
        rows = csv.reader(fh, delimiter="\t")
        header = next(rows, None)
        if header is None:
            raise ParseError("empty annotation file", path=path)
        for lineno, row in enumerate(rows, start=2):
            if not row or not "".join(row).strip():
                continue
            if len(row) != 3:
                raise ParseError("expected item_id, rater_id, label", line=lineno, path=path)
            item, rater, label = (c.strip() for c in row)
            if rater in per_item[item]:
                raise ParseError(f"rater {rater!r} labels item {item!r} twice", line=lineno, path=path)
            per_item[item][rater] = label
    if not per_item:
        raise ParseError("no annotations", path=path)
    items = sorted(per_item)
    cats = sorted({lab for d in per_item.values() for lab in d.values()})
    counts = np.zeros((len(items), max(len(cats), 2)), dtype=np.int64)
    col = {c: j for j, c in enumerate(cats)}
    for i, item in enumerate(items):
        for label in per_item[item].values():
            counts[i, col[label]] += 1
    return counts, items, cats


# -- output ------------------------------------------------------------------

TSV_HEADER = ("experiment", "source", "target", "accuracy")


def fmt_acc(x: float) -> str:
    return f"{x:.3f}"


def write_results_tsv(rows: Sequence[tuple[str, str, str, float]], fh) -> None:
    fh.write("\t".join(TSV_HEADER) + "\n")
    for exp, src, tgt, acc in rows:
        fh.write(f"{exp}\t{src}\t{tgt}\t{fmt_acc(acc)}\n")


def format_table(rows: Sequence[Sequence[str]], header: Sequence[str]) -> str:
    table = [list(header)] + [list(r) for r in rows]
    widths = [max(len(r[j]) for r in table) for j in range(len(header))]
    lines = ["  ".join(c.ljust(w) if j == 0 else c.rjust(w) for j, (c, w) in enumerate(zip(r, widths)))
             for r in table]
    lines.insert(1, "-" * len(lines[0]))
    return "\n".join(lines) + "\n"


def format_pairwise(matrix: dict[tuple[str, str], float], languages: Sequence[str]) -> str:
    rows = []
    for src in languages:
        rows.append([src] + ["" if src == tgt else fmt_acc(matrix[(src, tgt)]) for tgt in languages])
    avg = column_means(matrix)
    rows.append(["Avg"] + [fmt_acc(avg[t]) if t in avg else "" for t in languages])
    return format_table(rows, ["train\\test"] + list(languages))
