"""Time SVM training with the numba kernels against the pure-numpy fallback.

    python3 benchmarks/bench_kernels.py [--users 200] [--tweets 50] [--repeat 3]

Features come from a synthetic corpus so the sparsity pattern is realistic.
Both backends are run on identical inputs; the script also reports how far
their weight vectors drift apart.
"""
import argparse
import time
from dataclasses import replace

import numpy as np

from bleachtext import _kernels
from bleachtext.bleach import FrequencyTable
from bleachtext.corpus import normalize_corpus
from bleachtext.features import FeatureSpec, vectorize, vocabulary_for
from bleachtext.linear import CSR, TrainerConfig, train
from bleachtext.pipeline import user_grams
from bleachtext.synth import PRESETS, generate_corpus


def featurize(users, spec):
    table = FrequencyTable.from_users(users) if spec.needs_frequency_table else None
    grams = user_grams(users, spec, table)
    vocab = vocabulary_for(spec, grams)
    return [vectorize(g, vocab, spec.weighting) for g in grams], len(vocab)


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--users", type=int, default=200)
    ap.add_argument("--tweets", type=int, default=50)
    ap.add_argument("--mode", choices=["abstract", "lexical"], default="abstract")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    if _kernels.numba is None:
        raise SystemExit("numba is not installed; nothing to compare")

    cfg = replace(PRESETS["mixed"], n_users=args.users, tweets_per_user=args.tweets)
    corpus = normalize_corpus(generate_corpus("xa", args.seed, cfg))
    spec = FeatureSpec.abstract() if args.mode == "abstract" else FeatureSpec.lexical()
    t0 = time.perf_counter()
    X, n_features = featurize(list(corpus.users), spec)
    y = corpus.labels
    csr = CSR.from_vectors(X, n_features)
    print(f"{len(X)} users, {n_features} features, {len(csr.data)} nonzeros "
          f"(featurized in {time.perf_counter() - t0:.2f}s)")

    trainer = TrainerConfig(seed=args.seed)
    # first call compiles (or loads the on-disk cache); keep it out of the timings
    train(X[:4], y[:4], trainer, n_features=n_features, use_numba=True)

    rows = []
    models = {}
    for name, flag in (("numpy", False), ("numba", True)):
        secs, m = best_of(lambda: train(X, y, trainer, n_features=n_features, use_numba=flag), args.repeat)
        models[name] = m
        rows.append((name, secs, m.epochs, secs / m.epochs))

    print(f"{'backend':8s} {'train s':>9s} {'epochs':>7s} {'ms/epoch':>9s}")
    for name, secs, epochs, per in rows:
        print(f"{name:8s} {secs:9.3f} {epochs:7d} {per * 1e3:9.2f}")
    print(f"speedup: {rows[0][1] / rows[1][1]:.1f}x")
    drift = np.abs(models["numpy"].weights - models["numba"].weights).max()
    print(f"max weight difference between backends: {drift:.2e}")


if __name__ == "__main__":
    main()
