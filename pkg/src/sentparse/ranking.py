"""Log-linear ranking of sentiment trees and its AdaGrad training loop."""

import logging
import math
import random
from collections import Counter
from dataclasses import dataclass, field

from .parser import COMB, DICT, DEFAULT_BEAM, decode

log = logging.getLogger(__name__)

DEFAULT_ALPHA = 0.1
DEFAULT_LAMBDA = 0.01

COMB_HIT = "CombHit"
DICT_HIT = "DictHit"


def comb_feature(rule_id):
    return "CombRule|" + rule_id


def dict_feature(rule_id):
    return "DictRule|" + rule_id


def local_features(item):
    """Features fired by one rule application (glue/OOV/aux/start: none)."""
    if item.kind == DICT:
        return {DICT_HIT: 1.0, dict_feature(item.rule_id): 1.0}
    if item.kind == COMB:
        return {COMB_HIT: 1.0, comb_feature(item.rule_id): 1.0}
    return {}


def extract_features(tree):
    feats = Counter()
    for node in tree.applications():
        if node.kind == DICT:
            feats[DICT_HIT] += 1.0
            feats[dict_feature(node.rule_id)] += 1.0
        elif node.kind == COMB:
            feats[COMB_HIT] += 1.0
            feats[comb_feature(node.rule_id)] += 1.0
    return dict(feats)


@dataclass
class Weights:
    psi: dict = field(default_factory=dict)
    adagrad_g: dict = field(default_factory=dict)

    def get(self, key, default=0.0):
        return self.psi.get(key, default)

    def __bool__(self):
        return bool(self.psi)

    def copy(self):
        return Weights(dict(self.psi), dict(self.adagrad_g))


def score(features, weights):
    psi = getattr(weights, "psi", weights)
    return math.fsum(v * psi.get(f, 0.0) for f, v in features.items())


def log_sum_exp(values):
    values = list(values)
    if not values:
        raise ValueError("log-partition of an empty candidate set")
    m = max(values)
    if math.isinf(m):
        return m
    return m + math.log(math.fsum(math.exp(v - m) for v in values))


def log_partition(candidates, weights):
    """log sum_t exp(phi(t) . psi) over candidate feature vectors."""
    return log_sum_exp(score(f, weights) for f in candidates)


def expected_features(candidates, weights):
    scores = [score(f, weights) for f in candidates]
    a = log_sum_exp(scores)
    out = Counter()
    for f, s in zip(candidates, scores):
        p = math.exp(s - a)
        for k, v in f.items():
            out[k] += p * v
    return out


def objective_and_gradient(instances, weights, lam=DEFAULT_LAMBDA,
                           regularize=None):
    """Marginal log-likelihood of the gold labels and its gradient.

    ``instances`` is a sequence of ``(candidates, correct)`` pairs of
    feature-vector lists, with ``correct`` the candidates predicting the
    gold label.  Instances with no correct candidate are skipped.  The L2
    term covers every weighted feature, or only ``regularize`` if given.
    """
    psi = getattr(weights, "psi", weights)
    total = 0.0
    grad = Counter()
    for candidates, correct in instances:
        if not correct:
            continue
        total += log_partition(correct, psi) - log_partition(candidates, psi)
        for k, v in expected_features(correct, psi).items():
            grad[k] += v
        for k, v in expected_features(candidates, psi).items():
            grad[k] -= v
    keys = psi.keys() if regularize is None else regularize
    reg = 0.0
    for k in keys if lam else ():
        w = psi.get(k, 0.0)
        if w:
            reg += w * w
            grad[k] -= lam * w
    total -= 0.5 * lam * reg
    return total, dict(grad)


def adagrad_step(weights, gradient, alpha=DEFAULT_ALPHA):
    """Ascent step with per-feature rates alpha / sqrt(sum of squared grads)."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    psi, g = weights.psi, weights.adagrad_g
    for k, gk in gradient.items():
        if gk == 0.0:
            continue
        acc = g.get(k, 0.0) + gk * gk
        g[k] = acc
        psi[k] = psi.get(k, 0.0) + alpha * gk / math.sqrt(acc)
    return weights


@dataclass
class TrainStats:
    steps: int = 0
    skipped: int = 0
    objective: list = field(default_factory=list)


def candidate_sets(result, gold):
    """Feature vectors of the K-best trees and of those predicting ``gold``."""
    all_feats, correct = [], []
    for tree in result.k_best:
        f = extract_features(tree)
        all_feats.append(f)
        if tree.label is gold:
            correct.append(f)
    return all_feats, correct


def train_ranker(corpus, grammar, k=DEFAULT_BEAM, iters=None, alpha=DEFAULT_ALPHA,
                 lam=DEFAULT_LAMBDA, seed=0, epochs=None, weights=None):
    """Stochastic training: sample, decode K-best, take one AdaGrad step.

    The budget is ``iters`` sampled instances, or ``epochs`` passes worth
    of samples (``epochs * len(corpus)``) when ``iters`` is None.  The L2
    penalty is applied to the features active in the sampled instance's
    candidates, which keeps each step sparse.
    """
    if iters is None:
        iters = int((epochs if epochs is not None else 1) * len(corpus))
    weights = weights if weights is not None else Weights()
    stats = TrainStats()
    if iters <= 0 or len(corpus) == 0:
        return weights, stats
    rng = random.Random(seed)
    window = []
    for step in range(iters):
        sent = corpus[rng.randrange(len(corpus))]
        result = decode(grammar, sent.tokens, k, weights)
        stats.steps += 1
        all_feats, correct = candidate_sets(result, sent.label)
        if not correct:
            stats.skipped += 1
            continue
        active = set()
        for f in all_feats:
            active.update(f)
        obj, grad = objective_and_gradient([(all_feats, correct)], weights,
                                           lam, regularize=active)
        adagrad_step(weights, grad, alpha)
        window.append(obj)
        if len(window) == len(corpus) or step == iters - 1:
            stats.objective.append(math.fsum(window) / len(window))
            window = []
    log.info("ranker: %d steps, %d skipped (no gold-label candidate)",
             stats.steps, stats.skipped)
    return weights, stats


def _fmt(x):
    return "%.17g" % x


def save_weights(weights, sink):
    lines = ["%s\t%s\t%s\n" % (k, _fmt(weights.psi.get(k, 0.0)),
                               _fmt(weights.adagrad_g.get(k, 0.0)))
             for k in sorted(set(weights.psi) | set(weights.adagrad_g))]
    text = "".join(lines)
    if hasattr(sink, "write"):
        sink.write(text)
    else:
        with open(sink, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)


def load_weights(source):
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source, encoding="utf-8") as f:
            text = f.read()
    w = Weights()
    for lineno, line in enumerate(text.split("\n"), start=1):
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ValueError("weights line %d: expected 3 tab-separated "
                             "fields" % lineno)
        w.psi[parts[0]] = float(parts[1])
        w.adagrad_g[parts[0]] = float(parts[2])
    return w
