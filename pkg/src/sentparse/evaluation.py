"""Cross-validated evaluation of the full learn / train / decode pipeline."""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .corpus import kfold
from .grammar import Polarity
from .induction import learn_grammar
from .parser import DEFAULT_BEAM, decode, format_tree
from .ranking import DEFAULT_ALPHA, DEFAULT_LAMBDA, train_ranker

log = logging.getLogger(__name__)

_WORKER = {}


def _init_worker(grammar, weights, k, fallback):
    _WORKER.update(grammar=grammar, weights=weights, k=k, fallback=fallback)


def _decode_one(tokens):
    w = _WORKER
    r = decode(w["grammar"], tokens, w["k"], w["weights"], w["fallback"])
    tree = format_tree(r.tree, tokens) if r.tree is not None else None
    return r.label, r.no_evidence, r.root_dist, tree


def decode_all(grammar, token_lists, k=DEFAULT_BEAM, weights=None,
               fallback=Polarity.NEG, threads=1):
    """Decode many sentences in input order, whatever ``threads`` is.

    Each result is ``(label, no_evidence, root_dist, bracketed_tree)``.
    """
    token_lists = [tuple(t) for t in token_lists]
    if threads <= 1 or len(token_lists) < 2:
        _init_worker(grammar, weights, k, fallback)
        return [_decode_one(t) for t in token_lists]
    with ProcessPoolExecutor(threads, initializer=_init_worker,
                             initargs=(grammar, weights, k, fallback)) as ex:
        return list(ex.map(_decode_one, token_lists, chunksize=16))


@dataclass
class FoldResult:
    fold: int
    n: int
    correct: int
    confusion: dict
    no_evidence: int
    baseline_correct: int

    @property
    def accuracy(self):
        return self.correct / self.n if self.n else 0.0

    @property
    def baseline_accuracy(self):
        return self.baseline_correct / self.n if self.n else 0.0


@dataclass
class Report:
    folds: list = field(default_factory=list)

    @property
    def mean_accuracy(self):
        return math.fsum(f.accuracy for f in self.folds) / len(self.folds)

    @property
    def mean_baseline(self):
        return math.fsum(f.baseline_accuracy for f in self.folds) / len(self.folds)

    @property
    def no_evidence_rate(self):
        n = sum(f.n for f in self.folds)
        return sum(f.no_evidence for f in self.folds) / n if n else 0.0

    def lines(self):
        conf = {}
        for f in self.folds:
            for key, v in f.confusion.items():
                conf[key] = conf.get(key, 0) + v
        out = ["folds=%d" % len(self.folds),
               "mean_accuracy=%.6f" % self.mean_accuracy,
               "majority_baseline=%.6f" % self.mean_baseline,
               "no_evidence_rate=%.6f" % self.no_evidence_rate]
        for key in sorted(conf):
            out.append("confusion_%s=%d" % (key, conf[key]))
        out.append("# fold\tn\taccuracy\tno_evidence\tbaseline")
        for f in self.folds:
            out.append("%d\t%d\t%.6f\t%d\t%.6f" % (
                f.fold, f.n, f.accuracy, f.no_evidence, f.baseline_accuracy))
        return out


def majority_label(corpus):
    """Most frequent training label; ties go to negative."""
    c = corpus.class_counts
    return Polarity.POS if c[Polarity.POS] > c[Polarity.NEG] else Polarity.NEG


def evaluate_split(train, test, induction_config, k=DEFAULT_BEAM, iters=None,
                   epochs=None, alpha=DEFAULT_ALPHA, lam=DEFAULT_LAMBDA,
                   seed=0, fallback=Polarity.NEG, threads=1, fold=0):
    grammar = learn_grammar(train, induction_config, seed).grammar
    weights, _ = train_ranker(train, grammar, k, iters=iters, alpha=alpha,
                              lam=lam, seed=seed, epochs=epochs)
    results = decode_all(grammar, [s.tokens for s in test], k, weights,
                         fallback, threads)
    confusion = {}
    correct = no_ev = 0
    for s, (label, no_evidence, _, _) in zip(test, results):
        key = "%s_%s" % (s.label.value, label.value)
        confusion[key] = confusion.get(key, 0) + 1
        correct += label is s.label
        no_ev += no_evidence
    base = majority_label(train)
    base_correct = sum(s.label is base for s in test)
    log.info("fold %d: accuracy %.4f (%d/%d)", fold, correct / len(test),
             correct, len(test))
    return FoldResult(fold, len(test), correct, confusion, no_ev, base_correct)


def cross_validate(corpus, folds, induction_config, seed=0, **kwargs):
    report = Report()
    for f, (train, test) in enumerate(kfold(corpus, folds, seed)):
        report.folds.append(evaluate_split(train, test, induction_config,
                                           seed=seed, fold=f, **kwargs))
    return report
