import io
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from bleachtext import __version__
from bleachtext.cli import main
from bleachtext.embed import EmbeddingTable, load_alignment, save_embeddings

SUBCOMMANDS = ["bleach", "train", "predict", "evaluate", "cv", "xlang", "features", "kappa",
               "align", "synth"]


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("BLEACH_SEED", raising=False)
    return tmp_path


@pytest.fixture
def corpora(workdir):
    assert main(["synth", "--out", "syn", "--langs", "xa,xb,xc", "--users", "40", "--tweets", "10",
                 "--seed", "5"]) == 0
    return workdir / "syn"


@pytest.mark.parametrize("cmd", SUBCOMMANDS)
def test_help(cmd, capsys):
    assert main([cmd, "--help"]) == 0
    assert "usage:" in capsys.readouterr().out


def test_usage_errors(workdir, capsys):
    assert main(["train", "--bogus"]) == 1
    assert main([]) == 1
    assert main(["frobnicate"]) == 1
    assert "usage" in capsys.readouterr().err


def test_version(capsys):
    assert main(["--version"]) == 0
    assert __version__ in capsys.readouterr().out


def test_bleach_worked_example(workdir, monkeypatch, capsys):
    (workdir / "freq.json").write_text(json.dumps({"a": 1000, "bag": 10, "of": 2000, "for": 5000,
                                                    "lunch!": 3}), encoding="utf-8")
    monkeypatch.setattr(sys, "stdin", io.StringIO("a bag of Doritos for lunch! \U0001F4A5\U0001F52B\U0001F52B\U0001F52B\n"))
    assert main(["bleach", "--channels", "all", "--freq-table", "freq.json"]) == 0
    assert capsys.readouterr().out.splitlines() == [
        "freq\t4 2 4 0 4 1 0",
        "len\t01 03 02 07 03 06 04",
        "punctc\tW W W W W W! \U0001F4A5\U0001F52B\U0001F52B\U0001F52B",
        "puncta\tW W W W W WP JJJJ",
        "shape\tL LL LL ULL LL LLX XX",
        "vowels\tV CVC VC CVCVCVC CVC CVCCCO OOOO",
    ]


def test_bleach_freq_needs_table(workdir, monkeypatch, capsys):
    monkeypatch.setattr(sys, "stdin", io.StringIO("hi\n"))
    assert main(["bleach", "--channels", "freq"]) == 1
    assert "freq-table" in capsys.readouterr().err


def test_train_evaluate_predict(corpora, workdir, capsys):
    assert main(["train", "--mode=abstract", "--channels=all", "--ngrams=1:5",
                 f"--corpus={corpora / 'xa.jsonl'}", "--out=xa.model", "--seed=42"]) == 0
    manifest = json.loads((workdir / "xa.model.manifest.json").read_text())
    assert manifest["command"] == "train" and manifest["seed"] == 42
    assert manifest["version"] == __version__
    assert set(manifest["inputs"].values()) and all(len(v) == 64 for v in manifest["inputs"].values())
    assert manifest["start"] <= manifest["end"]
    capsys.readouterr()

    assert main(["evaluate", "--model", "xa.model", "--corpus", str(corpora / "xb.jsonl")]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "experiment\tsource\ttarget\taccuracy"
    assert out[1].startswith("evaluate\txa.model\txb\t")

    assert main(["predict", "--model", "xa.model", "--corpus", str(corpora / "xb.jsonl"), "--out", "p.tsv"]) == 0
    rows = (workdir / "p.tsv").read_text().splitlines()
    assert len(rows) == 41 and rows[1].split("\t")[1] in ("F", "M")

    # evaluating on the training corpus is refused
    assert main(["evaluate", "--model", "xa.model", "--corpus", str(corpora / "xa.jsonl")]) == 1
    assert "leaked" in capsys.readouterr().err


def test_future_model_version(corpora, workdir, capsys):
    assert main(["train", "--corpus", str(corpora / "xa.jsonl"), "--out", "m.model"]) == 0
    raw = (workdir / "m.model").read_bytes()
    head, _, body = raw.partition(b"\n")
    parts = head.split()
    parts[1] = b"99"
    (workdir / "m.model").write_bytes(b" ".join(parts) + b"\n" + body)
    assert main(["predict", "--model", "m.model", "--corpus", str(corpora / "xb.jsonl")]) == 1
    assert "version" in capsys.readouterr().err


def test_io_error_exit_code(workdir, capsys):
    assert main(["train", "--corpus", "missing.jsonl", "--out", "m.model"]) == 2
    assert main(["kappa", "--annotations", "missing.tsv"]) == 2


def test_parse_error_exit_code(workdir, capsys):
    (workdir / "bad.jsonl").write_text('{"user_id": "a", "gender": "Q", "tweets": ["x"]}\n')
    assert main(["train", "--corpus", "bad.jsonl", "--out", "m.model"]) == 1
    assert "bad.jsonl:1:" in capsys.readouterr().err


def test_cv_is_byte_reproducible(corpora, workdir):
    args = ["cv", "--corpus", f"{corpora / 'xa.jsonl'},{corpora / 'xb.jsonl'}", "--folds", "4",
            "--ngrams", "1:3", "--seed", "3"]
    assert main(args + ["--out", "run1"]) == 0
    assert main(args + ["--out", "run2"]) == 0
    for name in ("results.tsv", "folds.tsv", "table.txt"):
        assert (workdir / "run1" / name).read_bytes() == (workdir / "run2" / name).read_bytes()
    rows = (workdir / "run1" / "results.tsv").read_text().splitlines()
    assert [r.split("\t")[:3] for r in rows[1:]] == [["cv-abstract", "xa", "xa"], ["cv-abstract", "xb", "xb"]]
    assert sorted(os.listdir(workdir / "run1")) == ["folds.tsv", "manifest.json", "results.tsv", "table.txt"]


def test_xlang_settings(corpora, workdir, capsys):
    src = f"{corpora / 'xa.jsonl'},{corpora / 'xb.jsonl'}"
    tgt = str(corpora / "xc.jsonl")
    assert main(["xlang", "--setting=all", f"--train={src}", f"--test={tgt}", "--mode=abstract",
                 "--out", "all"]) == 0
    rows = (workdir / "all" / "results.tsv").read_text().splitlines()
    assert len(rows) == 2 and rows[1].startswith("all-abstract\txa,xb\txc\t")
    assert main(["xlang", "--setting=avg", f"--train={src}", f"--test={tgt}", "--out", "avg"]) == 0
    rows = (workdir / "avg" / "results.tsv").read_text().splitlines()
    assert [r.split("\t")[0] for r in rows[1:]] == ["pair-abstract", "pair-abstract", "avg-abstract"]
    pair_accs = [float(r.split("\t")[3]) for r in rows[1:3]]
    assert float(rows[3].split("\t")[3]) == pytest.approx(np.mean(pair_accs), abs=1e-3)
    assert main(["xlang", "--setting=pairwise", f"--train={src},{tgt}", "--out", "pw"]) == 0
    assert "Avg" in (workdir / "pw" / "table.txt").read_text()
    assert main(["xlang", "--setting=all", f"--train={src}", f"--test={corpora / 'xa.jsonl'}"]) == 1


def test_xlang_embeds(corpora, workdir):
    rng = np.random.default_rng(0)
    emb = []
    for lang in ("xa", "xb"):
        words = sorted({t for line in (corpora / f"{lang}.jsonl").read_text(encoding="utf-8").splitlines()
                        for tw in json.loads(line)["tweets"] for t in tw.split()} | {"USER", "URL"})
        save_embeddings(EmbeddingTable(tuple(words), rng.normal(size=(len(words), 3))), workdir / f"{lang}.vec")
        emb.append(f"{lang}={workdir / (lang + '.vec')}")
    assert main(["xlang", "--setting=embeds", f"--train={corpora / 'xa.jsonl'}",
                 f"--test={corpora / 'xb.jsonl'}", f"--embeddings={','.join(emb)}", "--out", "emb"]) == 0
    assert (workdir / "emb" / "results.tsv").read_text().splitlines()[1].startswith("all-embeds\txa\txb\t")


def test_features_report(corpora, workdir):
    models = []
    for lang in ("xa", "xb", "xc"):
        assert main(["train", "--corpus", str(corpora / f"{lang}.jsonl"), "--out", f"{lang}.model"]) == 0
        models.append(f"{lang}.model")
    assert main(["features", "--models", ",".join(models), "--out", "feat.tsv"]) == 0
    lines = (workdir / "feat.tsv").read_text().splitlines()
    assert lines[0] == "gender\trank\tfeature\tlanguages\tmean_abs_weight"
    assert sum(1 for line in lines if line.startswith("F\t")) == 10


def test_kappa(workdir, capsys):
    (workdir / "ann.tsv").write_text("item\trater\tlabel\na\t1\tF\na\t2\tF\na\t3\tM\n"
                                     "b\t1\tM\nb\t2\tF\nb\t3\tM\n")
    assert main(["kappa", "--annotations", "ann.tsv"]) == 0
    assert capsys.readouterr().out.startswith("fleiss_kappa\t-0.3333\titems=2\traters=3")


def test_align(workdir):
    rng = np.random.default_rng(1)
    X = rng.normal(size=(20, 3))
    Q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    words = tuple(f"w{i}" for i in range(20))
    save_embeddings(EmbeddingTable(words, X), workdir / "src.vec")
    save_embeddings(EmbeddingTable(words, X @ Q), workdir / "tgt.vec")
    assert main(["align", "--src", "src.vec", "--tgt", "tgt.vec", "--out", "W.txt", "--no-normalize"]) == 0
    W = load_alignment(workdir / "W.txt")
    assert np.abs(W - Q).max() < 1e-9
    assert (workdir / "W.txt.manifest.json").exists()


def test_seed_from_environment(workdir, monkeypatch):
    monkeypatch.setenv("BLEACH_SEED", "17")
    assert main(["synth", "--out", "s", "--langs", "xa", "--users", "4", "--tweets", "2"]) == 0
    assert json.loads((workdir / "s" / "manifest.json").read_text())["seed"] == 17
    monkeypatch.setenv("BLEACH_SEED", "nope")
    assert main(["synth", "--out", "s2"]) == 1


def test_writes_stay_in_out(corpora, workdir):
    before = set(os.listdir(workdir))
    assert main(["train", "--corpus", str(corpora / "xa.jsonl"), "--out", "only.model"]) == 0
    assert set(os.listdir(workdir)) - before == {"only.model", "only.model.manifest.json"}


def test_module_entry_point(workdir):
    proc = subprocess.run([sys.executable, "-m", "bleachtext", "bleach", "--channels", "shape"],
                          input="Hello World!!!\n", capture_output=True, text=True, check=True)
    assert proc.stdout == "shape\tULL ULLXX\n"
