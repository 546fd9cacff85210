"""Bottom-up chart decoding with K-best cells.

Spans are processed by increasing length.  For each span every applicable
rule instantiation becomes a *source*: a grid over the sorted K-best lists
of its children.  Because a derivation's score is its children's scores
plus a per-rule constant, each source can be enumerated lazily in
non-increasing score order, and a heap merges all sources of a span.  A
popped candidate is kept if it passes the constraints and its cell still
has room, so every cell ends up with exactly the K best
constraint-satisfying derivations over the children available to it.
"""

import heapq
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

from .grammar import NonTerminal, Polarity
from .polarity import PolarityError, eval_combination, eval_glue

N, P, S, E = NonTerminal.N, NonTerminal.P, NonTerminal.S, NonTerminal.E
POLAR = (N, P)

DEFAULT_BEAM = 30

DICT, COMB, GLUE, OOV, AUX_LEFT, AUX_RIGHT, START = (
    "dict", "comb", "glue", "oov", "aux-left", "aux-right", "start")


class DecodeError(ValueError):
    pass


class ChartItem:
    """One derivation of ``symbol`` over tokens ``[i, j)``."""

    __slots__ = ("i", "j", "symbol", "dist", "score", "kind", "rule",
                 "children", "size", "rule_id")

    def __init__(self, i, j, symbol, dist, score, kind, rule, children,
                 rule_id):
        self.i = i
        self.j = j
        self.symbol = symbol
        self.dist = dist
        self.score = score
        self.kind = kind
        self.rule = rule
        self.children = children
        self.size = 1 + sum(c.size for c in children)
        self.rule_id = rule_id

    @property
    def span(self):
        return (self.i, self.j)

    @property
    def label(self):
        """Predicted polarity of the subtree (None for E and S->E)."""
        node = self.children[0] if self.symbol is S else self
        if node.symbol is E:
            return None
        return node.symbol.polarity

    def applications(self):
        """All rule applications in the subtree, pre-order."""
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def derivation(self):
        """Hashable description of the full derivation."""
        return (self.rule_id, self.i, self.j,
                tuple(c.derivation() for c in self.children))

    def __repr__(self):
        return "ChartItem([%d,%s,%d] %s score=%.6g)" % (
            self.i, self.symbol.value, self.j, self.rule_id, self.score)


class Application(NamedTuple):
    """A rule instantiation over a span, before polarity is evaluated.

    ``children`` lists ``((i, j), symbol)`` references into the chart, in
    surface order.  ``lhs`` is None for glue rules, whose left-hand side is
    whichever polarity wins the product.
    """
    kind: str
    lhs: Optional[NonTerminal]
    rule: object
    children: tuple
    rule_id: str


def match_pattern(pattern, tokens, i, j):
    """Yield slot spans for every way ``pattern`` covers ``tokens[i:j]``."""
    last = len(pattern) - 1

    def rec(e, p, acc):
        if e > last:
            if p == j:
                yield acc
            return
        x = pattern[e]
        if not isinstance(x, NonTerminal):
            if p < j and tokens[p] == x:
                yield from rec(e + 1, p + 1, acc)
        elif e == last:
            if p < j:
                yield acc + ((p, j),)
        else:
            nxt = pattern[e + 1]
            for q in range(p + 1, j):
                if tokens[q] == nxt:
                    yield from rec(e + 1, q, acc + ((p, q),))

    return rec(0, i, ())


def _sentence_rules(grammar, tokens):
    vocab = set(tokens)
    rules = []
    for tok in sorted(vocab):
        for rule in grammar.combinations_starting_with(tok):
            if all(t in vocab for t in rule.terminals):
                rules.append(rule)
    rules.sort(key=lambda r: r.rule_id)
    return rules


class Chart:
    """Cells keyed by ``(i, j, symbol)``; each holds at most K items."""

    def __init__(self, n, k):
        self.n = n
        self.k = k
        self.cells = {}

    def get(self, i, j, symbol):
        return self.cells.get((i, j, symbol), [])

    def has(self, i, j, symbol):
        return bool(self.cells.get((i, j, symbol)))

    def add(self, item):
        cell = self.cells.setdefault((item.i, item.j, item.symbol), [])
        if len(cell) >= self.k:
            return False
        cell.append(item)
        return True

    def full(self, i, j, symbol):
        return len(self.cells.get((i, j, symbol), ())) >= self.k

    def items(self):
        for cell in self.cells.values():
            yield from cell


def match_span(grammar, tokens, i, j, chart, comb_rules=None):
    """Every rule application whose children are present in ``chart``.

    Start rules are not included; they apply only to the finished full span.
    """
    if not 0 <= i < j <= len(tokens):
        raise ValueError("bad span (%d, %d)" % (i, j))
    out = []
    span = tuple(tokens[i:j])
    if j - i <= grammar.l_max:
        rule = grammar.lookup_fragment(span)
        if rule is not None:
            out.append(Application(DICT, rule.lhs, rule, (), rule.rule_id))
    if all(grammar.is_oov_token(t) for t in span):
        out.append(Application(OOV, E, None, (), "E→" + " ".join(span)))
    if comb_rules is None:
        comb_rules = _sentence_rules(grammar, tokens)
    for rule in comb_rules:
        for slots in match_pattern(rule.pattern, tokens, i, j):
            refs = tuple((s, sym) for s, sym in zip(slots, rule.slots))
            if all(chart.has(a, b, sym) for (a, b), sym in refs):
                out.append(Application(COMB, rule.lhs, rule, refs, rule.rule_id))
    for k in range(i + 1, j):
        for x1 in POLAR:
            if not chart.has(i, k, x1):
                continue
            for x2 in POLAR:
                if chart.has(k, j, x2):
                    out.append(Application(
                        GLUE, None, None, (((i, k), x1), ((k, j), x2)),
                        "X→%s %s" % (x1.value, x2.value)))
        if chart.has(i, k, E):
            for x1 in POLAR:
                if chart.has(k, j, x1):
                    out.append(Application(
                        AUX_LEFT, x1, None, (((i, k), E), ((k, j), x1)),
                        "%s→E %s" % (x1.value, x1.value)))
        if chart.has(k, j, E):
            for x1 in POLAR:
                if chart.has(i, k, x1):
                    out.append(Application(
                        AUX_RIGHT, x1, None, (((i, k), x1), ((k, j), E)),
                        "%s→%s E" % (x1.value, x1.value)))
    return out


def check_constraints(kind, lhs, dist, children=(), rule=None, tau=0.5):
    """C1: the span's polarity agrees with ``lhs``.  C2 (combination rules
    only): every slot item is more confident than ``tau`` in its slot's
    polarity.  OOV applications are exempt from both.
    """
    if kind == OOV:
        return True
    if lhs is None or not lhs.is_polar or dist is None:
        return False
    pol = lhs.polarity
    if not dist.prob(pol) > dist.prob(pol.opposite()):
        return False
    if kind == COMB:
        for child, slot in zip(children, rule.slots):
            if not child.dist.prob(slot.polarity) > tau:
                return False
    return True


def evaluate(app, children):
    """Polarity of an application given concrete child items.

    Returns ``(lhs, dist)``; glue picks the winning polarity as lhs (None
    on an exact tie, which no glue rule can license).
    """
    if app.kind == DICT:
        return app.lhs, app.rule.dist
    if app.kind == COMB:
        return app.lhs, eval_combination(app.rule, [c.dist for c in children])
    if app.kind == GLUE:
        left, right = children[0].dist, children[1].dist
        dist = eval_glue(left, right, Polarity.POS)
        winner = dist.argmax()
        return (winner.symbol if winner else None), dist
    if app.kind == AUX_LEFT:
        return app.lhs, children[1].dist
    if app.kind == AUX_RIGHT:
        return app.lhs, children[0].dist
    if app.kind == OOV:
        return E, None
    raise ValueError(app.kind)


def _log_odds_neg(dist):
    if dist.p_pos == 0.0:
        return math.inf
    if dist.p_neg == 0.0:
        return -math.inf
    return math.log(dist.p_neg) - math.log(dist.p_pos)


def _glue_can_produce(lists):
    """Which lhs symbols a glue grid over ``lists`` can possibly yield."""
    hi = [max(_log_odds_neg(it.dist) for it in lst) for lst in lists]
    lo = [min(_log_odds_neg(it.dist) for it in lst) for lst in lists]
    out = set()
    up, down = hi[0] + hi[1], lo[0] + lo[1]
    if math.isnan(up) or up > 0:
        out.add(N)
    if math.isnan(down) or down < 0:
        out.add(P)
    return out


class _Source:
    __slots__ = ("app", "lists", "local", "produces", "visited")

    def __init__(self, app, lists, local, produces):
        self.app = app
        self.lists = lists
        self.local = local
        self.produces = produces
        self.visited = set()


def local_score(app, weights):
    """Ranking score contributed by the application itself."""
    if not weights:
        return 0.0
    if app.kind == DICT:
        return weights.get("DictHit", 0.0) + weights.get("DictRule|" + app.rule_id, 0.0)
    if app.kind == COMB:
        return weights.get("CombHit", 0.0) + weights.get("CombRule|" + app.rule_id, 0.0)
    return 0.0


@dataclass
class DecodeResult:
    label: Polarity
    tree: Optional[ChartItem]
    k_best: list
    no_evidence: bool = False
    chart: Optional[Chart] = field(default=None, repr=False)

    @property
    def root_dist(self):
        if self.tree is None or self.no_evidence:
            return None
        return self.tree.children[0].dist


def _psi(weights):
    if weights is None:
        return {}
    return getattr(weights, "psi", weights)


def build_chart(grammar, tokens, k=DEFAULT_BEAM, weights=None):
    """Fill the K-best chart for ``tokens`` (all spans, no start rules)."""
    if k < 1:
        raise ValueError("beam size must be >= 1")
    tokens = tuple(tokens)
    n = len(tokens)
    if n == 0:
        raise DecodeError("empty sentence")
    psi = _psi(weights)
    chart = Chart(n, k)
    comb_rules = _sentence_rules(grammar, tokens)
    tau = grammar.tau_c2
    slot_lists = {}

    def confident(span, sym):
        key = (span, sym)
        lst = slot_lists.get(key)
        if lst is None:
            pol = sym.polarity
            lst = [it for it in chart.get(span[0], span[1], sym)
                   if it.dist.prob(pol) > tau]
            slot_lists[key] = lst
        return lst

    for length in range(1, n + 1):
        for i in range(0, n - length + 1):
            j = i + length
            _fill_span(chart, grammar, tokens, i, j, psi, comb_rules,
                       confident)
    return chart


def _fill_span(chart, grammar, tokens, i, j, psi, comb_rules, confident):
    sources = []
    for app in match_span(grammar, tokens, i, j, chart, comb_rules):
        if app.kind == OOV:
            chart.add(ChartItem(i, j, E, None, 0.0, OOV, None, (), app.rule_id))
            continue
        if app.kind == COMB:
            lists = [confident(span, sym) for span, sym in app.children]
        else:
            lists = [chart.get(a, b, sym) for (a, b), sym in app.children]
        if any(not lst for lst in lists):
            continue
        if app.kind == GLUE:
            produces = _glue_can_produce(lists)
            if not produces:
                continue
        else:
            produces = {app.lhs}
        sources.append(_Source(app, lists, local_score(app, psi), produces))

    heap = []
    seq = 0

    def push(src_idx, idx):
        nonlocal seq
        src = sources[src_idx]
        if idx in src.visited:
            return
        src.visited.add(idx)
        children = tuple(lst[x] for lst, x in zip(src.lists, idx))
        score = src.local + sum(c.score for c in children)
        size = 1 + sum(c.size for c in children)
        heapq.heappush(heap, (-score, size, src.app.rule_id, seq, src_idx,
                              idx, children, score))
        seq += 1

    for s in range(len(sources)):
        push(s, (0,) * len(sources[s].lists))

    open_symbols = {x for x in POLAR if not chart.full(i, j, x)}
    while heap and open_symbols:
        _, _, rule_id, _, s, idx, children, score = heapq.heappop(heap)
        src = sources[s]
        if not (src.produces & open_symbols):
            continue
        app = src.app
        try:
            lhs, dist = evaluate(app, children)
        except PolarityError:
            lhs = None
        if lhs in open_symbols and check_constraints(
                app.kind, lhs, dist, children, app.rule, grammar.tau_c2):
            if app.kind == GLUE:
                rule_id = lhs.value + rule_id[1:]
            chart.add(ChartItem(i, j, lhs, dist, score, app.kind, app.rule,
                                children, rule_id))
            if chart.full(i, j, lhs):
                open_symbols.discard(lhs)
        for d in range(len(idx)):
            if idx[d] + 1 < len(src.lists[d]):
                push(s, idx[:d] + (idx[d] + 1,) + idx[d + 1:])


def _start_items(chart, n):
    items = []
    for sym in (N, P, E):
        for child in chart.get(0, n, sym):
            items.append(ChartItem(0, n, S, child.dist, child.score, START,
                                   None, (child,), "S→" + sym.value))
    items.sort(key=lambda it: (-it.score, it.size, it.rule_id))
    return items[:chart.k]


def decode(grammar, tokens, k=DEFAULT_BEAM, weights=None,
           fallback=Polarity.NEG, keep_chart=False):
    """Parse ``tokens`` and return the best tree, its label and the K-best.

    The label is the polarity of the best-scoring N or P derivation of the
    whole sentence.  When none exists the result carries ``fallback`` and
    ``no_evidence=True``.
    """
    tokens = tuple(tokens)
    chart = build_chart(grammar, tokens, k, weights)
    n = len(tokens)
    k_best = _start_items(chart, n)
    polar = [t for t in k_best if t.children[0].symbol is not E]
    if polar:
        best = polar[0]
        result = DecodeResult(best.label, best, k_best)
    else:
        result = DecodeResult(fallback, k_best[0] if k_best else None,
                              k_best, no_evidence=True)
    if keep_chart:
        result.chart = chart
    return result


def classify(grammar, tokens, k=DEFAULT_BEAM, weights=None,
             fallback=Polarity.NEG):
    return decode(grammar, tokens, k, weights, fallback).label


def format_tree(item, tokens):
    """Bracketed rendering, e.g. ``(S (P (E the) (P good)))``."""
    if item.kind in (DICT, OOV):
        return "(%s %s)" % (item.symbol.value, " ".join(tokens[item.i:item.j]))
    if item.kind == COMB:
        parts = []
        pos = item.i
        kids = iter(item.children)
        for x in item.rule.pattern:
            if isinstance(x, NonTerminal):
                child = next(kids)
                parts.append(format_tree(child, tokens))
                pos = child.j
            else:
                parts.append(tokens[pos])
                pos += 1
        return "(%s %s)" % (item.symbol.value, " ".join(parts))
    return "(%s %s)" % (item.symbol.value,
                        " ".join(format_tree(c, tokens) for c in item.children))


def tree_records(item):
    """Flat per-node records for structured output."""
    out = []
    for node in item.applications():
        out.append({
            "span": [node.i, node.j],
            "symbol": node.symbol.value,
            "rule": node.rule_id,
            "p_neg": node.dist.p_neg if node.dist else None,
            "p_pos": node.dist.p_pos if node.dist else None,
            "score": node.score,
        })
    return out
