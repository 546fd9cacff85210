"""Labeled sentence corpora: tokenization, loading, balancing and k-fold splits."""

import os
import random
import string
import unicodedata
from dataclasses import dataclass

from .grammar import Polarity

_PUNCT = frozenset(string.punctuation)

LABEL_TOKENS = {
    "0": Polarity.NEG, "neg": Polarity.NEG, "negative": Polarity.NEG,
    "1": Polarity.POS, "pos": Polarity.POS, "positive": Polarity.POS,
}


class CorpusError(ValueError):
    pass


class CorpusParseError(CorpusError):
    def __init__(self, path, lineno, message):
        super().__init__("%s:%d: %s" % (path, lineno, message))
        self.lineno = lineno


def _split_chunk(chunk):
    head = []
    while chunk and chunk[0] in _PUNCT:
        head.append(chunk[0])
        chunk = chunk[1:]
    tail = []
    while chunk and chunk[-1] in _PUNCT:
        tail.append(chunk[-1])
        chunk = chunk[:-1]
    body = []
    if chunk:
        # split internal apostrophes: it's -> it ' s
        parts = chunk.split("'")
        for n, part in enumerate(parts):
            if n:
                body.append("'")
            if part:
                body.append(part)
    return head + body + tail[::-1]


def tokenize(text):
    """Lowercase, whitespace-split, and peel punctuation into separate tokens.

    >>> tokenize("The movie is good.")
    ['the', 'movie', 'is', 'good', '.']
    >>> tokenize("it's flawed")
    ['it', "'", 's', 'flawed']
    """
    text = unicodedata.normalize("NFC", text).strip().lower()
    if not text:
        raise CorpusError("empty sentence")
    tokens = []
    for chunk in text.split():
        tokens.extend(_split_chunk(chunk))
    return tokens


@dataclass(frozen=True)
class LabeledSentence:
    tokens: tuple
    label: Polarity
    raw: str = ""

    @classmethod
    def from_text(cls, text, label):
        return cls(tuple(tokenize(text)), label, text)


class Corpus:
    def __init__(self, sentences=()):
        self.sentences = tuple(sentences)
        self.class_counts = {Polarity.NEG: 0, Polarity.POS: 0}
        for s in self.sentences:
            self.class_counts[s.label] += 1

    def __len__(self):
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)

    def __getitem__(self, i):
        return self.sentences[i]

    def __eq__(self, other):
        return isinstance(other, Corpus) and self.sentences == other.sentences

    def __repr__(self):
        return "Corpus(%d: %d neg / %d pos)" % (
            len(self), self.class_counts[Polarity.NEG],
            self.class_counts[Polarity.POS])

    @property
    def is_balanced(self):
        return self.class_counts[Polarity.NEG] == self.class_counts[Polarity.POS]


def parse_label(token):
    return LABEL_TOKENS.get(token.strip().lower())


def _read_tsv(path):
    sentences = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip() or line.startswith("#"):
                continue
            label_tok, sep, text = line.partition("\t")
            if not sep:
                raise CorpusParseError(path, lineno, "expected label<TAB>text")
            label = parse_label(label_tok)
            if label is None:
                raise CorpusParseError(path, lineno,
                                       "unknown label %r" % label_tok)
            try:
                sentences.append(LabeledSentence.from_text(text, label))
            except CorpusError:
                raise CorpusParseError(path, lineno, "empty sentence")
    return sentences


def _read_pl05(path):
    # sentence polarity v1.0 layout: <prefix>.pos / <prefix>.neg, latin-1
    if os.path.isdir(path):
        path = os.path.join(path, "rt-polarity")
    sentences = []
    for suffix, label in ((".neg", Polarity.NEG), (".pos", Polarity.POS)):
        with open(path + suffix, encoding="latin-1") as f:
            for line in f:
                if line.strip():
                    sentences.append(LabeledSentence.from_text(line, label))
    return sentences


def load_corpus(path, format="tsv"):
    if format == "tsv":
        return Corpus(_read_tsv(path))
    if format == "pl05":
        return Corpus(_read_pl05(path))
    raise CorpusError("unknown corpus format %r" % format)


def write_tsv(corpus, path):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for s in corpus:
            text = s.raw if s.raw else " ".join(s.tokens)
            f.write("%d\t%s\n" % (s.label is Polarity.POS, text.strip()))


def balance(corpus, seed):
    """Downsample the majority class to the minority size."""
    by_label = {Polarity.NEG: [], Polarity.POS: []}
    for i, s in enumerate(corpus):
        by_label[s.label].append(i)
    size = min(len(v) for v in by_label.values())
    rng = random.Random(seed)
    keep = set()
    for label in (Polarity.NEG, Polarity.POS):
        idx = by_label[label]
        keep.update(idx if len(idx) == size else rng.sample(idx, size))
    return Corpus(s for i, s in enumerate(corpus) if i in keep)


def kfold(corpus, k, seed):
    """Stratified k-fold split; returns ``[(train, test), ...]``.

    Each class is shuffled and dealt round-robin over the folds, with the
    deal continuing across classes so fold sizes differ by at most one.
    """
    if k < 2:
        raise CorpusError("k must be at least 2")
    if k > len(corpus):
        raise CorpusError("k=%d exceeds corpus size %d" % (k, len(corpus)))
    rng = random.Random(seed)
    fold_of = [0] * len(corpus)
    pos = 0
    for label in (Polarity.NEG, Polarity.POS):
        idx = [i for i, s in enumerate(corpus) if s.label is label]
        rng.shuffle(idx)
        for i in idx:
            fold_of[i] = pos % k
            pos += 1
    folds = []
    for f in range(k):
        test = Corpus(s for i, s in enumerate(corpus) if fold_of[i] == f)
        train = Corpus(s for i, s in enumerate(corpus) if fold_of[i] != f)
        folds.append((train, test))
    return folds
