import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from bleachtext.corpus import (Corpus, UserRecord, balance_downsample, cap_tweets, load_corpus,
                               normalize_text, stratified_kfold, write_corpus)
from bleachtext.errors import ParseError, ValidationError


def make_corpus(n_f, n_m, tweets=3, lang="xx"):
    users = [UserRecord(f"f{i}", "F", tuple(f"t{j}" for j in range(tweets)), lang) for i in range(n_f)]
    users += [UserRecord(f"m{i}", "M", tuple(f"t{j}" for j in range(tweets)), lang) for i in range(n_m)]
    return Corpus(lang, tuple(users))


def write_lines(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def test_load_two_users(tmp_path):
    p = write_lines(tmp_path / "nl.jsonl", [
        json.dumps({"user_id": "a", "gender": "F", "tweets": ["hoi @piet", "kijk www.x.nl/a"]}),
        json.dumps({"user_id": "b", "gender": "M", "tweets": ["dag"]}),
    ])
    c = load_corpus(p, "nl")
    assert [u.user_id for u in c] == ["a", "b"]
    assert c.users[0].tweets == ("hoi USER", "kijk URL")
    assert c.users[0].language == "nl"
    assert load_corpus(p, "nl", normalize=False).users[0].tweets[0] == "hoi @piet"


def test_load_empty_file(tmp_path):
    p = tmp_path / "e.jsonl"
    p.write_text("", encoding="utf-8")
    assert len(load_corpus(p, "en")) == 0


@pytest.mark.parametrize("bad,line", [
    ('{"user_id": "b", "gender": "X", "tweets": ["a"]}', 2),
    ('{"user_id": "b", "gender": "F", "tweets": ["a"]', 2),
    ('{"user_id": "a", "gender": "F", "tweets": ["a"]}', 2),
    ('{"user_id": "b", "gender": "F", "tweets": []}', 2),
    ('["not", "an", "object"]', 2),
])
def test_load_errors_name_the_line(tmp_path, bad, line):
    p = write_lines(tmp_path / "c.jsonl", ['{"user_id": "a", "gender": "F", "tweets": ["x"]}', bad])
    with pytest.raises(ParseError) as exc:
        load_corpus(p, "en")
    assert exc.value.line == line
    assert f":{line}:" in str(exc.value)


def test_write_roundtrip(tmp_path):
    c = make_corpus(2, 3)
    write_corpus(c, tmp_path / "x.jsonl")
    assert load_corpus(tmp_path / "x.jsonl", "xx") == c


def test_record_invariants():
    with pytest.raises(ValidationError):
        UserRecord("", "F", ("a",))
    with pytest.raises(ValidationError):
        UserRecord("u", "F", ())
    with pytest.raises(ValidationError):
        Corpus("en", (UserRecord("u", "F", ("a",)), UserRecord("u", "M", ("b",))))


@pytest.mark.parametrize("raw,out", [
    ("@bob hi http://x.co/ab", "USER hi URL"),
    ("no mentions here", "no mentions here"),
    ("USER URL", "USER URL"),
    ("mail me@home.com", "mail me@home.com"),
    ("(@ann_1) see https://t.co/x?y=1 now", "(@ann_1) see URL now"),
    ("@ann: WWW.example.org!", "USER: URL"),
])
def test_normalize_text(raw, out):
    assert normalize_text(raw) == out


@given(st.text(st.sampled_from(list("ab @:/.whtps_1 \n")), max_size=40))
def test_normalize_idempotent(text):
    once = normalize_text(text)
    assert normalize_text(once) == once


def test_balance_downsample():
    c = make_corpus(10, 6)
    b = balance_downsample(c, 1)
    assert b.gender_counts() == {"F": 6, "M": 6}
    assert set(b.users) <= set(c.users)
    assert balance_downsample(c, 1) == b
    # survivors keep their original order
    pos = [c.users.index(u) for u in b.users]
    assert pos == sorted(pos)


def test_balance_identity_and_errors():
    c = make_corpus(5, 5)
    assert balance_downsample(c, 3) == c
    with pytest.raises(ValidationError):
        balance_downsample(make_corpus(3, 0), 0)


@given(st.integers(1, 15), st.integers(1, 15), st.integers(0, 2**32 - 1))
def test_balance_properties(n_f, n_m, seed):
    c = make_corpus(n_f, n_m)
    b = balance_downsample(c, seed)
    assert b.gender_counts() == {"F": min(n_f, n_m), "M": min(n_f, n_m)}
    assert set(b.users) <= set(c.users)


def test_cap_tweets():
    c = Corpus("en", (UserRecord("u", "F", tuple(str(i) for i in range(250))),
                      UserRecord("v", "M", tuple(str(i) for i in range(20)))))
    capped = cap_tweets(c, 200)
    assert capped.users[0].tweets == tuple(str(i) for i in range(200))
    assert capped.users[1].tweets == c.users[1].tweets
    assert all(len(u.tweets) == 20 for u in cap_tweets(c, 20))
    with pytest.raises(ValidationError):
        cap_tweets(c, 0)


def test_kfold_twenty_users():
    c = make_corpus(10, 10)
    folds = stratified_kfold(c, 10, seed=0)
    assert len(folds) == 10
    for tr, te in folds:
        assert sorted(c.users[i].gender for i in te) == ["F", "M"]
        assert len(tr) == 18
    test_all = sorted(i for _, te in folds for i in te)
    assert test_all == list(range(20))


def test_kfold_minimal_and_errors():
    folds = stratified_kfold(make_corpus(2, 2), 2, seed=5)
    assert all(sorted(make_corpus(2, 2).users[i].gender for i in te) == ["F", "M"] for _, te in folds)
    with pytest.raises(ValidationError):
        stratified_kfold(make_corpus(3, 1), 2, seed=0)
    with pytest.raises(ValidationError):
        stratified_kfold(make_corpus(4, 4), 1, seed=0)


@given(st.integers(2, 6), st.integers(0, 10), st.integers(0, 10), st.integers(0, 1000))
def test_kfold_partition_and_stratification(k, extra_f, extra_m, seed):
    c = make_corpus(k + extra_f, k + extra_m)
    folds = stratified_kfold(c, k, seed)
    seen = [i for _, te in folds for i in te]
    assert sorted(seen) == list(range(len(c)))
    for tr, te in folds:
        assert not set(tr) & set(te)
        assert len(tr) + len(te) == len(c)
        for g, n in c.gender_counts().items():
            got = sum(c.users[i].gender == g for i in te)
            assert abs(got - n / k) < 1
    assert [t.tolist() for _, t in stratified_kfold(c, k, seed)] == [t.tolist() for _, t in folds]


@given(st.lists(st.text(max_size=3), min_size=1, max_size=30), st.integers(1, 40))
def test_cap_is_prefix(tweets, k):
    c = Corpus("en", (UserRecord("u", "F", tuple(tweets)),))
    out = cap_tweets(c, k).users[0].tweets
    assert out == tuple(tweets[:k])
