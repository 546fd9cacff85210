import pytest
from hypothesis import given, settings, strategies as st

from sentparse.corpus import (Corpus, CorpusError, CorpusParseError,
                              LabeledSentence, balance, kfold, load_corpus,
                              tokenize, write_tsv)
from sentparse.grammar import Polarity

POS, NEG = Polarity.POS, Polarity.NEG


@pytest.mark.parametrize("text,tokens", [
    ("The movie is good.", ["the", "movie", "is", "good", "."]),
    ("it's flawed", ["it", "'", "s", "flawed"]),
    ("GOOD!!!", ["good", "!", "!", "!"]),
    ("  (great)  fun ", ["(", "great", ")", "fun"]),
])
def test_tokenize_examples(text, tokens):
    assert tokenize(text) == tokens


def test_tokenize_nfc():
    assert tokenize("café") == tokenize("café")


@pytest.mark.parametrize("text", ["", "   ", "\t\n"])
def test_tokenize_empty(text):
    with pytest.raises(CorpusError):
        tokenize(text)


@given(st.text(min_size=1).filter(lambda t: t.strip()))
def test_tokenize_pure_and_lowercase(text):
    a = tokenize(text)
    assert a == tokenize(text)
    assert all(t == t.lower() for t in a)
    assert all(t and not any(c.isspace() for c in t) for t in a)


def test_load_tsv(tmp_path):
    p = tmp_path / "c.tsv"
    p.write_text("# comment\n1\tgood movie\n0\tbad movie\n\npos\tfine\n", encoding="utf-8")
    c = load_corpus(str(p))
    assert len(c) == 3
    assert c.class_counts == {NEG: 1, POS: 2}
    assert c[0].tokens == ("good", "movie") and c[0].label is POS


@pytest.mark.parametrize("body,lineno", [
    ("1\tok\nmaybe\tbad\n", 2),
    ("1\tok\n0 no tab\n", 2),
    ("1\t   \n", 1),
])
def test_load_errors_carry_line(tmp_path, body, lineno):
    p = tmp_path / "c.tsv"
    p.write_text(body, encoding="utf-8")
    with pytest.raises(CorpusParseError) as e:
        load_corpus(str(p))
    assert e.value.lineno == lineno


def test_pl05_layout(tmp_path):
    (tmp_path / "rt-polarity.pos").write_bytes("a gr\xe9at film .\n".encode("latin-1"))
    (tmp_path / "rt-polarity.neg").write_bytes(b"dull .\nbad .\n")
    c = load_corpus(str(tmp_path), format="pl05")
    assert c.class_counts == {NEG: 2, POS: 1}
    assert "gréat" in c[2].tokens


def test_unknown_format(tmp_path):
    with pytest.raises(CorpusError):
        load_corpus(str(tmp_path), format="xml")


def test_write_tsv_roundtrip(tmp_path):
    c = Corpus([LabeledSentence.from_text("Good fun!", POS),
                LabeledSentence.from_text("dull", NEG)])
    write_tsv(c, str(tmp_path / "o.tsv"))
    assert load_corpus(str(tmp_path / "o.tsv")) == c


def make(n_pos, n_neg):
    return Corpus([LabeledSentence(("w%d" % i,), POS) for i in range(n_pos)]
                  + [LabeledSentence(("v%d" % i,), NEG) for i in range(n_neg)])


def test_balance_downsamples():
    b = balance(make(6, 4), seed=0)
    assert len(b) == 8 and b.is_balanced
    assert balance(make(6, 4), seed=0) == b


def test_balance_idempotent():
    c = make(5, 5)
    assert balance(c, seed=3) == c


def test_kfold_five_by_two():
    c = make(6, 4)
    folds = kfold(c, 5, seed=1)
    tests = [t for _, t in folds]
    assert [len(t) for t in tests] == [2] * 5
    seen = [s for t in tests for s in t]
    assert sorted(s.tokens for s in seen) == sorted(s.tokens for s in c)
    for train, test in folds:
        assert len(train) + len(test) == len(c)
        assert not set(train) & set(test)


def test_kfold_errors():
    with pytest.raises(CorpusError):
        kfold(make(2, 2), 1, 0)
    with pytest.raises(CorpusError):
        kfold(make(2, 2), 5, 0)


@settings(max_examples=100)
@given(st.integers(1, 40), st.integers(1, 40), st.integers(2, 10), st.integers(0, 99))
def test_kfold_partition_and_stratification(n_pos, n_neg, k, seed):
    c = make(n_pos, n_neg)
    if k > len(c):
        return
    folds = kfold(c, k, seed)
    assert folds == kfold(c, k, seed)
    ids = sorted(s.tokens for _, t in folds for s in t)
    assert ids == sorted(s.tokens for s in c)
    sizes = [len(t) for _, t in folds]
    assert max(sizes) - min(sizes) <= 1
    for _, t in folds:
        expected = n_pos * len(t) / len(c)
        assert abs(t.class_counts[POS] - expected) <= 1 + 1e-9
