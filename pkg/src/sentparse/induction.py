"""Grammar induction from sentence-level polarity labels.

Dictionary rules are frequent fragments with Laplace-smoothed polarity,
counted so that occurrences inside the slot of a known negation rule do
not count towards the fragment.  Combination rules generalize dictionary
fragments by replacing confident sub-fragments with their polarity symbol.
The two steps alternate, then every combination rule gets a fitted
logistic composition.
"""

import logging
import random
from collections import Counter, defaultdict
from dataclasses import asdict, dataclass, field

from .grammar import (
    DEFAULT_LMAX, DEFAULT_TAU_C2, CombinationRule, DictionaryRule, Grammar,
    GrammarError, NonTerminal, Polarity, PolarityDist, RuleType, check_pattern)
from .polarity import DEFAULT_ALPHA, DEFAULT_EPSILON, fit_rule_params
from .stopwords import is_function_fragment

log = logging.getLogger(__name__)

MIN_TRAINING_PAIRS = 3


@dataclass(frozen=True)
class InductionConfig:
    tau_f: int = 4
    tau_p: float = 0.7
    tau_delta: float = 0.05
    tau_r: int = 4
    tau_c: float = 0.75
    l_max: int = DEFAULT_LMAX
    iterations: int = 3
    tau_c2: float = DEFAULT_TAU_C2
    fit_alpha: float = DEFAULT_ALPHA
    fit_epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        if self.tau_f < 1:
            raise ValueError("tau_f must be >= 1")
        if not 0.5 < self.tau_p < 1:
            raise ValueError("tau_p must lie in (0.5, 1)")
        if not 0 < self.tau_delta < 0.5:
            raise ValueError("tau_delta must lie in (0, 0.5)")
        if self.tau_r < 0:
            raise ValueError("tau_r must be >= 0")
        if not 0.5 < self.tau_c <= 1:
            raise ValueError("tau_c must lie in (0.5, 1]")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.l_max < 1:
            raise ValueError("l_max must be >= 1")
        if self.tau_c2 < 0.5:
            raise ValueError("tau_c2 must be >= 0.5")

    def as_dict(self):
        return asdict(self)


# -- negation coverage -------------------------------------------------------

def slot_extents(pattern, tokens):
    """Widest slot intervals over all placements of ``pattern`` in ``tokens``.

    A slot at the start (end) of the pattern is stretched to the sentence
    start (end); slots between terminals are fixed by the terminals.
    """
    n = len(tokens)
    last = len(pattern) - 1
    out = []

    def rec(e, p, acc):
        if e > last:
            out.extend(acc)
            return
        x = pattern[e]
        if not isinstance(x, NonTerminal):
            if p < n and tokens[p] == x:
                rec(e + 1, p + 1, acc)
        elif e == last:
            if p < n:
                out.extend(acc)
                out.append((p, n))
        else:
            nxt = pattern[e + 1]
            for q in range(p + 1, n):
                if tokens[q] == nxt:
                    rec(e + 1, q, acc + [(p, q)])

    if isinstance(pattern[0], NonTerminal):
        nxt = pattern[1]
        for q in range(1, n):
            if tokens[q] == nxt:
                rec(1, q, [(0, q)])
    else:
        for p in range(n):
            rec(0, p, [])
    return out


def negation_extents(tokens, rules):
    extents = set()
    for rule in rules:
        if rule.rule_type is RuleType.NEGATION:
            extents.update(slot_extents(rule.pattern, tokens))
    return sorted(extents)


def covered_by_negation(tokens, span, rules, extents=None):
    """True iff ``span`` lies inside a slot of some negation-rule match."""
    i, j = span
    if extents is None:
        extents = negation_extents(tokens, rules)
    return any(a <= i and j <= b for a, b in extents)


# -- dictionary rules --------------------------------------------------------

def laplace(count_neg, count_pos):
    """Smoothed (P(neg), P(pos)) from (possibly reweighted) counts."""
    total = count_neg + count_pos + 2.0
    return (count_neg + 1.0) / total, (count_pos + 1.0) / total


def count_fragments(corpus, comb_rules, config, prune=True):
    """Per-sentence fragment counts, skipping negation-covered occurrences.

    Returns ``{fragment: [count_neg, count_pos]}`` for every fragment whose
    count reaches ``tau_f``.  Candidates of length L are only those whose
    two length L-1 sub-fragments occur in at least ``tau_f`` sentences;
    raw occurrence support bounds the negation-aware count from above, so
    the pruning never drops a qualifying fragment.
    """
    neg_rules = [r for r in comb_rules if r.rule_type is RuleType.NEGATION]
    sentences = [(s.tokens, s.label) for s in corpus]
    extents = [negation_extents(tok, neg_rules) if neg_rules else []
               for tok, _ in sentences]
    kept = {}
    frequent = None
    for length in range(1, config.l_max + 1):
        support = Counter()
        counts = defaultdict(lambda: [0, 0])
        for (tokens, label), ext in zip(sentences, extents):
            seen, aware = set(), set()
            for i in range(len(tokens) - length + 1):
                frag = tokens[i:i + length]
                if prune and length > 1 and (frag[:-1] not in frequent
                                             or frag[1:] not in frequent):
                    continue
                seen.add(frag)
                if not any(a <= i and i + length <= b for a, b in ext):
                    aware.add(frag)
            support.update(seen)
            idx = 1 if label is Polarity.POS else 0
            for frag in aware:
                counts[frag][idx] += 1
        for frag, c in counts.items():
            if c[0] + c[1] >= config.tau_f:
                kept[frag] = c
        frequent = {f for f, c in support.items() if c >= config.tau_f}
        if prune and not frequent:
            break
    return kept


def class_weights(corpus):
    """Inverse class-frequency weights; both 1.0 on a balanced corpus."""
    n_neg = corpus.class_counts[Polarity.NEG]
    n_pos = corpus.class_counts[Polarity.POS]
    if n_neg == n_pos or not n_neg or not n_pos:
        return 1.0, 1.0
    half = (n_neg + n_pos) / 2.0
    return half / n_neg, half / n_pos


def mine_dictionary_rules(corpus, comb_rules, config):
    counts = count_fragments(corpus, comb_rules, config)
    w_neg, w_pos = class_weights(corpus)
    rules = []
    for frag in sorted(counts):
        if is_function_fragment(frag):
            continue
        c_neg, c_pos = counts[frag]
        p_neg, p_pos = laplace(c_neg * w_neg, c_pos * w_pos)
        if p_neg == p_pos:
            continue
        lhs = NonTerminal.P if p_pos > p_neg else NonTerminal.N
        rules.append(DictionaryRule(lhs, frag, PolarityDist(p_neg, p_pos),
                                    c_neg, c_pos))
    return rules


# -- combination rules -------------------------------------------------------

def _generalizations(dict_rules, config):
    """Yield ``(lhs, pattern, type_or_None, x, y)`` for every replacement.

    ``x`` is the composition input (1, P(L_w | w), ...) and ``y`` the whole
    fragment's probability of its own polarity.
    """
    index = {r.fragment: r for r in dict_rules}

    def confident(sub):
        r = index.get(sub)
        if r is None:
            return None
        p = r.dist.prob(r.lhs.polarity)
        return (r.lhs, p) if p > config.tau_p else None

    for rule in dict_rules:
        f = rule.fragment
        m = len(f)
        pol = rule.lhs.polarity
        y = rule.dist.prob(pol)
        subs = {}
        for i in range(m):
            for j in range(i + 1, m + 1):
                if (i, j) == (0, m):
                    continue
                c = confident(f[i:j])
                if c is not None:
                    subs[(i, j)] = c
        for (i, j), (sym, p) in sorted(subs.items()):
            pattern = f[:i] + (sym,) + f[j:]
            if sym.polarity is not pol:
                kind = RuleType.NEGATION
            elif y > p + config.tau_delta:
                kind = RuleType.STRENGTHEN
            elif y < p - config.tau_delta:
                kind = RuleType.WEAKEN
            else:
                kind = None
            yield rule.lhs, pattern, kind, (1.0, p), y
        spans = sorted(subs)
        for a, (i0, j0) in enumerate(spans):
            for (i1, j1) in spans[a + 1:]:
                if i1 <= j0:
                    continue
                s0, p0 = subs[(i0, j0)]
                s1, p1 = subs[(i1, j1)]
                pattern = f[:i0] + (s0,) + f[j0:i1] + (s1,) + f[j1:]
                kind = RuleType.CONTRAST if s0 is not s1 else None
                yield rule.lhs, pattern, kind, (1.0, p0, p1), y


_TYPE_ORDER = (RuleType.NEGATION, RuleType.STRENGTHEN, RuleType.WEAKEN,
               RuleType.CONTRAST)


def mine_combination_rules(dict_rules, config):
    """Generalize dictionary fragments into typed combination rules.

    A candidate survives if it occurs more than ``tau_r`` times and its
    majority type covers more than ``tau_c`` of its typed occurrences.
    Returned rules carry zero parameters; fitting happens separately.
    """
    total = Counter()
    typed = defaultdict(Counter)
    for lhs, pattern, kind, _, _ in _generalizations(dict_rules, config):
        key = (lhs, pattern)
        total[key] += 1
        if kind is not None:
            typed[key][kind] += 1
    rules = []
    for key in sorted(total, key=lambda k: (k[0].value, _pattern_sort_key(k[1]))):
        if total[key] <= config.tau_r:
            continue
        tc = typed.get(key)
        if not tc:
            continue
        n_typed = sum(tc.values())
        best = max(_TYPE_ORDER, key=lambda t: (tc[t], -_TYPE_ORDER.index(t)))
        if tc[best] / n_typed <= config.tau_c:
            continue
        lhs, pattern = key
        try:
            check_pattern(pattern)
            n_slots = sum(isinstance(x, NonTerminal) for x in pattern)
            rules.append(CombinationRule(
                lhs, pattern, best, (0.0,) * (n_slots + 1),
                {t.value: tc[t] for t in _TYPE_ORDER if tc[t]}))
        except GrammarError:
            continue
    return rules


def _pattern_sort_key(pattern):
    return tuple("[%s]" % x.value if isinstance(x, NonTerminal) else x
                 for x in pattern)


def build_polarity_training(dict_rules, comb_rules, config):
    """Composition examples ``[(x, y), ...]`` for each combination rule key."""
    wanted = {r.key for r in comb_rules}
    data = {k: [] for k in wanted}
    for lhs, pattern, _, x, y in _generalizations(dict_rules, config):
        key = (lhs, pattern)
        if key in wanted:
            data[key].append((x, y))
    return data


# -- outer loop --------------------------------------------------------------

@dataclass
class RuleDiagnostics:
    rule_id: str
    rule_type: str
    type_counts: dict
    n_pairs: int
    converged: bool
    theta: tuple


@dataclass
class InductionResult:
    grammar: Grammar
    diagnostics: list = field(default_factory=list)
    dropped: list = field(default_factory=list)
    naive_dictionary: list = field(default_factory=list)


def fit_combination_rules(dict_rules, comb_rules, config, rng):
    """Fit theta for each rule; rules with too few examples are dropped.

    Returns ``(fitted_rules, diagnostics, dropped_rule_ids)``.
    """
    training = build_polarity_training(dict_rules, comb_rules, config)
    fitted, diagnostics, dropped = [], [], []
    for rule in sorted(comb_rules, key=lambda r: r.rule_id):
        data = training[rule.key]
        if len(data) < MIN_TRAINING_PAIRS:
            log.warning("dropping %s: only %d training pairs", rule.rule_id,
                        len(data))
            dropped.append(rule.rule_id)
            continue
        result = fit_rule_params(rule, data, config.fit_alpha,
                                 config.fit_epsilon, rng=rng)
        fitted.append(rule.with_theta(result.theta))
        diagnostics.append(RuleDiagnostics(
            rule.rule_id, rule.rule_type.value, dict(rule.type_counts),
            len(data), result.converged, result.theta))
    return fitted, diagnostics, dropped


def learn_grammar(corpus, config=None, seed=0):
    """Alternate dictionary and combination mining, then fit compositions."""
    config = config or InductionConfig()
    comb = []
    dictionary = []
    naive = []
    for it in range(config.iterations):
        dictionary = mine_dictionary_rules(corpus, comb, config)
        if it == 0:
            naive = dictionary
        comb = mine_combination_rules(dictionary, config) if dictionary else []
        log.info("iteration %d: %d dictionary rules, %d combination rules",
                 it + 1, len(dictionary), len(comb))
    fitted, diagnostics, dropped = fit_combination_rules(
        dictionary, comb, config, random.Random(seed))
    grammar = Grammar(dictionary, fitted, l_max=config.l_max,
                      tau_c2=config.tau_c2)
    return InductionResult(grammar, diagnostics, dropped, naive)
