"""Command-line entry point: ``bleachtext <subcommand> [flags]``.

Exit status is 0 on success, 1 on invalid input or usage, 2 on I/O failure.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import io
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .bleach import ALL_ABS, CHANNEL_ORDER, Channel, FrequencyTable, bleach_tokens, ordered, parse_channels, tokenize
from .corpus import load_corpus, normalize_text, write_corpus
from .embed import align, build_pseudo_dictionary, load_embeddings, save_alignment
from .errors import BleachError, ValidationError
from .evaluation import (ExperimentConfig, column_means, evaluate_users, fleiss_kappa, fmt_acc,
                         format_pairwise, format_table, load_annotations, pairwise_matrix, prepare,
                         run_cross_all, run_cross_avg, run_cv, run_embeds_all, top_feature_report,
                         write_results_tsv)
from .features import BINARY, LEXICAL, TFIDF, FeatureSpec
from .linear import TrainerConfig, load_model, save_model
from .pipeline import check_hygiene, featurize, fit_model
from .synth import PRESETS, PROFILES, generate_corpus

log = logging.getLogger("bleachtext")


class UsageError(ValidationError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _default_seed() -> int:
    raw = os.environ.get("BLEACH_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"BLEACH_SEED must be an integer, got {raw!r}") from None


def _range(text: str) -> tuple[int, int]:
    try:
        lo, _, hi = text.partition(":")
        r = (int(lo), int(hi or lo))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO:HI, got {text!r}") from None
    if not 1 <= r[0] <= r[1]:
        raise argparse.ArgumentTypeError(f"invalid range {text!r}")
    return r


def _lang_path(item: str) -> tuple[str, str]:
    """``en=path`` or a path whose file stem is the language code."""
    if "=" in item:
        lang, _, path = item.partition("=")
        return lang, path
    return Path(item).name.split(".")[0], item


def _split(text: str) -> list[str]:
    return [t for t in (s.strip() for s in text.split(",")) if t]


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class Manifest:
    def __init__(self, args, inputs):
        self.args = args
        self.inputs = [str(p) for p in inputs]
        self.start = _dt.datetime.now(_dt.timezone.utc)

    def write(self, path) -> None:
        flags = {k: v for k, v in vars(self.args).items() if k != "func"}
        doc = {
            "command": self.args.command,
            "flags": {k: (list(v) if isinstance(v, tuple) else v) for k, v in flags.items()},
            "seed": getattr(self.args, "seed", None),
            "inputs": {p: _sha256(p) for p in self.inputs},
            "tool": "bleachtext",
            "version": __version__,
            "start": self.start.isoformat(),
            "end": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        }
        Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8")


def _spec_from_args(args) -> FeatureSpec:
    weighting = args.weighting
    if args.mode == LEXICAL:
        return FeatureSpec.lexical(word=args.ngrams or (1, 2), char=args.char_ngrams or (3, 6),
                                   weighting=weighting, min_df=args.min_df, char_min_df=args.char_min_df)
    lo_hi = args.ngrams or (1, 5)
    channels = parse_channels(args.channels)
    return FeatureSpec(mode="abstract", token_ngram_range=lo_hi, channels=channels,
                       weighting=weighting, min_df=args.min_df, char_min_df=args.char_min_df)


def _experiment_from_args(args) -> ExperimentConfig:
    trainer = TrainerConfig(C=args.C, tol=args.tol, max_iter=args.max_iter, seed=args.seed)
    return ExperimentConfig(spec=_spec_from_args(args), trainer=trainer,
                            tweets_per_user=args.tweets_per_user, folds=getattr(args, "folds", 10),
                            seed=args.seed, balance=not args.no_balance)


def _load_corpora(items):
    out = []
    for item in items:
        lang, path = _lang_path(item)
        out.append((load_corpus(path, lang), path))
    return out


def _open_out(path):
    if path is None or path == "-":
        return _StdoutSink()
    return open(path, "w", encoding="utf-8", newline="\n")


class _StdoutSink(io.StringIO):
    def close(self):
        sys.stdout.write(self.getvalue())
        super().close()


# -- subcommands ---------------------------------------------------------------

def cmd_bleach(args) -> int:
    table = None
    if args.freq_table:
        with open(args.freq_table, encoding="utf-8") as fh:
            counts = json.load(fh)
        if not isinstance(counts, dict):
            raise ValidationError("frequency table must be a JSON object of token -> count")
        table = FrequencyTable({str(k): int(v) for k, v in counts.items()})
    if args.channels:
        channels = ordered(parse_channels(args.channels))
    else:
        channels = ordered(ALL_ABS if table is not None else ALL_ABS - {Channel.Frequency})
    if Channel.Frequency in channels and table is None:
        raise ValidationError("the freq channel needs --freq-table")
    out = sys.stdout
    for line in sys.stdin:
        tokens = tokenize(normalize_text(line.rstrip("\n")))
        for c in channels:
            out.write(f"{c.value}\t{' '.join(bleach_tokens(tokens, c, table))}\n")
    return 0


def cmd_train(args) -> int:
    manifest = Manifest(args, [_lang_path(args.corpus)[1]])
    (corpus, _), = _load_corpora([args.corpus])
    cfg = _experiment_from_args(args)
    corpus = prepare(corpus, cfg)
    model = fit_model(corpus.users, cfg.spec, cfg.trainer)
    save_model(model, args.out)
    manifest.write(str(args.out) + ".manifest.json")
    log.info("trained on %d users, %d features, %d epochs", len(corpus), model.n_features, model.epochs)
    return 0


def _model_and_corpus(args):
    model = load_model(args.model)
    (corpus, _), = _load_corpora([args.corpus])
    if args.tweets_per_user:
        from .corpus import cap_tweets
        corpus = cap_tweets(corpus, args.tweets_per_user)
    return model, corpus


def cmd_predict(args) -> int:
    manifest = Manifest(args, [args.model, _lang_path(args.corpus)[1]])
    model, corpus = _model_and_corpus(args)
    check_hygiene(model, corpus.users)
    scores = model.decision_many(featurize(model, corpus.users))
    with _open_out(args.out) as fh:
        fh.write("user_id\tprediction\tdecision\n")
        for u, s in zip(corpus.users, scores):
            fh.write(f"{u.user_id}\t{'F' if s >= 0 else 'M'}\t{s:.6f}\n")
    if args.out and args.out != "-":
        manifest.write(args.out + ".manifest.json")
    return 0


def cmd_evaluate(args) -> int:
    manifest = Manifest(args, [args.model, _lang_path(args.corpus)[1]])
    model, corpus = _model_and_corpus(args)
    acc = evaluate_users(model, corpus.users)
    with _open_out(args.out) as fh:
        write_results_tsv([("evaluate", Path(args.model).name, corpus.language, acc)], fh)
    if args.out and args.out != "-":
        manifest.write(args.out + ".manifest.json")
    return 0


def _write_experiment(args, manifest, rows, text, extra=None) -> None:
    if not args.out:
        buf = io.StringIO()
        write_results_tsv(rows, buf)
        sys.stdout.write(buf.getvalue())
        return
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "results.tsv", "w", encoding="utf-8", newline="\n") as fh:
        write_results_tsv(rows, fh)
    (out / "table.txt").write_text(text, encoding="utf-8")
    for name, content in (extra or {}).items():
        (out / name).write_text(content, encoding="utf-8")
    manifest.write(out / "manifest.json")
    sys.stdout.write(text)


def cmd_cv(args) -> int:
    items = _split(args.corpus)
    manifest = Manifest(args, [_lang_path(i)[1] for i in items])
    cfg = _experiment_from_args(args)
    rows, table_rows, fold_lines = [], [], ["language\tfold\taccuracy\n"]
    for corpus, _ in _load_corpora(items):
        res = run_cv(corpus, cfg)
        rows.append((f"cv-{cfg.spec.mode}", corpus.language, corpus.language, res.mean))
        n = len(prepare(corpus, cfg))
        table_rows.append([corpus.language, str(n), fmt_acc(res.mean)])
        fold_lines += [f"{corpus.language}\t{k}\t{fmt_acc(a)}\n" for k, a in enumerate(res.fold_accuracies)]
    text = format_table(table_rows, ["lang", "users", f"{cfg.spec.mode} {cfg.folds}-fold"])
    _write_experiment(args, manifest, rows, text, {"folds.tsv": "".join(fold_lines)})
    return 0


def cmd_xlang(args) -> int:
    cfg = _experiment_from_args(args)
    train_items = _split(args.train)
    test_items = _split(args.test) if args.test else []
    inputs = [_lang_path(i)[1] for i in train_items + test_items]
    emb_items = _split(args.embeddings) if args.embeddings else []
    inputs += [_lang_path(i)[1] for i in emb_items]
    manifest = Manifest(args, inputs)
    sources = [c for c, _ in _load_corpora(train_items)]
    mode = cfg.spec.mode if args.setting != "embeds" else "embeds"

    if args.setting == "pairwise":
        corpora = sources + [c for c, _ in _load_corpora(test_items)]
        matrix = pairwise_matrix(corpora, cfg)
        langs = [c.language for c in corpora]
        rows = [(f"pair-{mode}", s, t, a) for (s, t), a in sorted(matrix.items())]
        rows += [(f"avg-{mode}", "*", t, a) for t, a in sorted(column_means(matrix).items())]
        _write_experiment(args, manifest, rows, format_pairwise(matrix, langs))
        return 0

    if len(test_items) != 1:
        raise UsageError("--test must name exactly one corpus for this setting")
    (target, _), = _load_corpora(test_items)
    if args.setting == "avg":
        res = run_cross_avg(sources, target, cfg)
        rows = [(f"pair-{mode}", s, target.language, a) for s, a in sorted(res.pairs.items())]
        rows.append((f"avg-{mode}", ",".join(sorted(res.pairs)), target.language, res.mean))
        acc = res.mean
    elif args.setting == "all":
        acc = run_cross_all(sources, target, cfg)
        rows = [(f"all-{mode}", ",".join(s.language for s in sources), target.language, acc)]
    else:
        if not emb_items:
            raise UsageError("--setting=embeds needs --embeddings=lang=path,...")
        tables = {lang: load_embeddings(path, lang) for lang, path in map(_lang_path, emb_items)}
        missing = {c.language for c in sources + [target]} - set(tables)
        if missing:
            raise UsageError(f"no embeddings for language(s): {', '.join(sorted(missing))}")
        acc = run_embeds_all(sources, target, tables, cfg)
        rows = [("all-embeds", ",".join(s.language for s in sources), target.language, acc)]
    text = format_table([[target.language, args.setting, fmt_acc(acc)]], ["test", "setting", mode])
    _write_experiment(args, manifest, rows, text)
    return 0


def cmd_features(args) -> int:
    paths = _split(args.models)
    manifest = Manifest(args, paths)
    models = [load_model(p) for p in paths]
    report = top_feature_report(models, args.k)
    with _open_out(args.out) as fh:
        fh.write("gender\trank\tfeature\tlanguages\tmean_abs_weight\n")
        for gender in ("M", "F"):
            for rank, r in enumerate(report[gender][:args.show], start=1):
                fh.write(f"{gender}\t{rank}\t{r.feature}\t{r.languages}\t{r.mean_abs_weight:.6f}\n")
    if args.out and args.out != "-":
        manifest.write(args.out + ".manifest.json")
    return 0


def cmd_kappa(args) -> int:
    counts, items, cats = load_annotations(args.annotations)
    kappa = fleiss_kappa(counts)
    n = int(counts[0].sum())
    sys.stdout.write(f"fleiss_kappa\t{kappa:.4f}\titems={len(items)}\traters={n}\tcategories={','.join(cats)}\n")
    return 0


def cmd_align(args) -> int:
    manifest = Manifest(args, [args.src, args.tgt])
    src, tgt = load_embeddings(args.src), load_embeddings(args.tgt)
    pairs = build_pseudo_dictionary(src, tgt)
    W = align(src, tgt, pairs, normalize=not args.no_normalize)
    save_alignment(W, args.out)
    manifest.write(args.out + ".manifest.json")
    log.info("aligned with %d pseudo-dictionary pairs", len(pairs))
    return 0


def cmd_synth(args) -> int:
    manifest = Manifest(args, [])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    base = PRESETS[args.preset]
    from dataclasses import replace
    cfg = replace(base, n_users=args.users, tweets_per_user=args.tweets)
    for lang in _split(args.langs):
        if lang not in PROFILES:
            raise UsageError(f"unknown synthetic language {lang!r}; choose from {', '.join(PROFILES)}")
        write_corpus(generate_corpus(lang, args.seed, cfg), out / f"{lang}.jsonl")
    manifest.write(out / "manifest.json")
    return 0


# -- parser ------------------------------------------------------------------

def _add_feature_flags(p) -> None:
    p.add_argument("--mode", choices=["abstract", "lexical"], default="abstract")
    p.add_argument("--channels", default="all", help="comma list of freq,len,punctc,puncta,shape,vowels or 'all'")
    p.add_argument("--ngrams", type=_range, default=None,
                   help="token n-gram range LO:HI (default 1:5 abstract, 1:2 lexical)")
    p.add_argument("--char-ngrams", type=_range, default=None, help="lexical character n-gram range (default 3:6)")
    p.add_argument("--weighting", choices=[TFIDF, BINARY], default=TFIDF)
    p.add_argument("--min-df", type=int, default=1)
    p.add_argument("--char-min-df", type=int, default=2)
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--max-iter", type=int, default=1000)
    p.add_argument("--tweets-per-user", type=int, default=200)
    p.add_argument("--no-balance", action="store_true", help="skip gender downsampling")


def build_parser() -> argparse.ArgumentParser:
    seed = _default_seed()
    parser = _Parser(prog="bleachtext", description="Gender prediction from bleached text.")
    parser.add_argument("--version", action="version", version=f"bleachtext {__version__}")
    parser.add_argument("--log-level", default="WARNING")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("bleach", help="bleach text lines from stdin")
    p.add_argument("--channels", default=None)
    p.add_argument("--freq-table", default=None, help="JSON object token -> count")
    p.set_defaults(func=cmd_bleach)

    p = sub.add_parser("train", help="train a model on one corpus")
    p.add_argument("--corpus", required=True, help="PATH or LANG=PATH")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=seed)
    _add_feature_flags(p)
    p.set_defaults(func=cmd_train)

    for name, fn, helptext in (("predict", cmd_predict, "predict genders for a corpus"),
                               ("evaluate", cmd_evaluate, "accuracy of a model on a corpus")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--model", required=True)
        p.add_argument("--corpus", required=True)
        p.add_argument("--out", default=None)
        p.add_argument("--tweets-per-user", type=int, default=None)
        p.set_defaults(func=fn)

    p = sub.add_parser("cv", help="in-language k-fold cross-validation")
    p.add_argument("--corpus", required=True, help="comma list of PATH or LANG=PATH")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--seed", type=int, default=seed)
    _add_feature_flags(p)
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("xlang", help="cross-language transfer")
    p.add_argument("--setting", choices=["avg", "all", "pairwise", "embeds"], default="all")
    p.add_argument("--train", required=True, help="comma list of source corpora")
    p.add_argument("--test", default=None, help="target corpus (pairwise: extra corpora)")
    p.add_argument("--embeddings", default=None, help="comma list of LANG=PATH word-vector files")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--seed", type=int, default=seed)
    _add_feature_flags(p)
    p.set_defaults(func=cmd_xlang)

    p = sub.add_parser("features", help="most predictive features across models")
    p.add_argument("--models", required=True, help="comma list of model files")
    p.add_argument("--k", type=int, default=20, help="top-k per model and gender")
    p.add_argument("--show", type=int, default=10)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("kappa", help="Fleiss' kappa from an annotation TSV")
    p.add_argument("--annotations", required=True)
    p.set_defaults(func=cmd_kappa)

    p = sub.add_parser("align", help="orthogonal map between two embedding files")
    p.add_argument("--src", required=True)
    p.add_argument("--tgt", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--no-normalize", action="store_true")
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("synth", help="write synthetic corpora")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--langs", default="xa,xb")
    p.add_argument("--preset", choices=sorted(PRESETS), default="transfer")
    p.add_argument("--users", type=int, default=200)
    p.add_argument("--tweets", type=int, default=50)
    p.add_argument("--seed", type=int, default=seed)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    try:
        parser = build_parser()
    except UsageError as exc:
        print(f"bleachtext: error: {exc}", file=sys.stderr)
        return 1
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (BleachError, ValueError) as exc:
        print(f"bleachtext {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"bleachtext {args.command}: I/O error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
