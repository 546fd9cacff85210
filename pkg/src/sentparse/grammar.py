"""Sentiment grammar: symbols, rule types, the rule inventory and its file format.

Only dictionary and combination rules are stored.  Glue (X -> X1 X2), OOV
(E -> w...), auxiliary (X -> E X1, X -> X1 E) and start (S -> Y) rules are
built into the parser and are never written to a grammar file.

File format (UTF-8, one record per line)::

    sgrammar v1 lmax=7 tau_c2=0.6
    D P 0.13 0.87 1 6<TAB>good
    C N negation 0.5,-4<TAB>not [P]
"""

import enum
from dataclasses import dataclass, field

from .stopwords import is_function_fragment

DEFAULT_LMAX = 7
DEFAULT_TAU_C2 = 0.55
HEADER_MAGIC = "sgrammar"
FORMAT_VERSION = "v1"


class GrammarError(ValueError):
    """Invalid rule or grammar (invariant violation, duplicate rule)."""


class GrammarParseError(GrammarError):
    def __init__(self, lineno, message):
        super().__init__("line %d: %s" % (lineno, message))
        self.lineno = lineno


class NonTerminal(enum.Enum):
    N = "N"
    P = "P"
    S = "S"
    E = "E"

    @property
    def is_polar(self):
        return self in (NonTerminal.N, NonTerminal.P)

    @property
    def polarity(self):
        if self is NonTerminal.N:
            return Polarity.NEG
        if self is NonTerminal.P:
            return Polarity.POS
        raise ValueError("%s carries no polarity" % self.value)

    def __str__(self):
        return self.value


class Polarity(enum.Enum):
    NEG = "neg"
    POS = "pos"

    def opposite(self):
        return Polarity.POS if self is Polarity.NEG else Polarity.NEG

    @property
    def symbol(self):
        return NonTerminal.N if self is Polarity.NEG else NonTerminal.P

    def __str__(self):
        return self.value


class RuleType(enum.Enum):
    NEGATION = "negation"
    STRENGTHEN = "strengthen"
    WEAKEN = "weaken"
    CONTRAST = "contrast"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class PolarityDist:
    p_neg: float
    p_pos: float

    def __post_init__(self):
        if not (0.0 <= self.p_neg <= 1.0 and 0.0 <= self.p_pos <= 1.0):
            raise ValueError("probabilities out of range: %r" % (self,))
        if abs(self.p_neg + self.p_pos - 1.0) > 1e-9:
            raise ValueError("probabilities do not sum to 1: %r" % (self,))

    @classmethod
    def from_prob(cls, polarity, p):
        """Distribution with probability ``p`` on ``polarity``."""
        if polarity is Polarity.POS:
            return cls(1.0 - p, p)
        return cls(p, 1.0 - p)

    def prob(self, polarity):
        return self.p_pos if polarity is Polarity.POS else self.p_neg

    def argmax(self):
        """Winning polarity, or None on an exact tie."""
        if self.p_pos > self.p_neg:
            return Polarity.POS
        if self.p_neg > self.p_pos:
            return Polarity.NEG
        return None


def _slot_text(sym):
    return "[%s]" % sym.value


def pattern_text(pattern):
    return " ".join(_slot_text(x) if isinstance(x, NonTerminal) else x
                    for x in pattern)


def parse_pattern(text):
    out = []
    for tok in text.split(" "):
        if tok in ("[N]", "[P]"):
            out.append(NonTerminal(tok[1]))
        elif tok == "":
            raise GrammarError("empty token in pattern %r" % text)
        else:
            out.append(tok)
    return tuple(out)


def check_pattern(pattern):
    """Raise GrammarError unless ``pattern`` is a legal combination body."""
    slots = [x for x in pattern if isinstance(x, NonTerminal)]
    if not 1 <= len(slots) <= 2:
        raise GrammarError("pattern %r must have 1 or 2 slots"
                           % pattern_text(pattern))
    if any(s not in (NonTerminal.N, NonTerminal.P) for s in slots):
        raise GrammarError("slots must be N or P")
    if len(slots) == len(pattern):
        raise GrammarError("pattern %r has no terminal" % pattern_text(pattern))
    for a, b in zip(pattern, pattern[1:]):
        if isinstance(a, NonTerminal) and isinstance(b, NonTerminal):
            raise GrammarError("adjacent slots in pattern %r"
                               % pattern_text(pattern))


@dataclass(frozen=True)
class DictionaryRule:
    lhs: NonTerminal
    fragment: tuple
    dist: PolarityDist
    count_neg: int = 0
    count_pos: int = 0

    def __post_init__(self):
        if not self.lhs.is_polar:
            raise GrammarError("dictionary lhs must be N or P")
        if not self.fragment:
            raise GrammarError("empty fragment")
        if is_function_fragment(self.fragment):
            raise GrammarError("fragment %r has only stop words/punctuation"
                               % " ".join(self.fragment))
        if self.dist.argmax() is not self.lhs.polarity:
            raise GrammarError("lhs %s disagrees with distribution for %r"
                               % (self.lhs, " ".join(self.fragment)))

    @property
    def rule_id(self):
        return "%s→%s" % (self.lhs.value, " ".join(self.fragment))


@dataclass(frozen=True)
class CombinationRule:
    lhs: NonTerminal
    pattern: tuple
    rule_type: RuleType
    theta: tuple
    type_counts: dict = field(default_factory=dict, compare=True, hash=False)

    def __post_init__(self):
        if not self.lhs.is_polar:
            raise GrammarError("combination lhs must be N or P")
        check_pattern(self.pattern)
        slots = self.slots
        if self.rule_type is RuleType.CONTRAST:
            if len(slots) != 2 or slots[0] == slots[1]:
                raise GrammarError("contrast rule %s needs two slots of "
                                   "differing polarity" % self.rule_id)
        elif len(slots) != 1:
            raise GrammarError("%s rule %s needs exactly one slot"
                               % (self.rule_type, self.rule_id))
        if len(self.theta) != len(slots) + 1:
            raise GrammarError("theta of %s has length %d, expected %d"
                               % (self.rule_id, len(self.theta), len(slots) + 1))

    @property
    def slots(self):
        return tuple(x for x in self.pattern if isinstance(x, NonTerminal))

    @property
    def terminals(self):
        return tuple(x for x in self.pattern if not isinstance(x, NonTerminal))

    @property
    def key(self):
        return (self.lhs, self.pattern)

    @property
    def rule_id(self):
        return "%s→%s" % (self.lhs.value, pattern_text(self.pattern))

    def with_theta(self, theta):
        return CombinationRule(self.lhs, self.pattern, self.rule_type,
                               tuple(float(t) for t in theta),
                               dict(self.type_counts))


class Grammar:
    """Immutable rule inventory.

    Dictionary rules are indexed by fragment; combination rules by their
    first terminal token, which every legal pattern has.
    """

    def __init__(self, dictionary=(), combinations=(), l_max=DEFAULT_LMAX,
                 tau_c2=DEFAULT_TAU_C2):
        if l_max < 1:
            raise GrammarError("l_max must be positive")
        if tau_c2 < 0.5:
            raise GrammarError("tau_c2 must be >= 0.5")
        self.l_max = int(l_max)
        self.tau_c2 = float(tau_c2)
        self._dictionary = {}
        for rule in dictionary:
            if rule.fragment in self._dictionary:
                raise GrammarError("duplicate dictionary fragment %r"
                                   % " ".join(rule.fragment))
            if len(rule.fragment) > self.l_max:
                raise GrammarError("fragment %r longer than l_max=%d"
                                   % (" ".join(rule.fragment), self.l_max))
            self._dictionary[rule.fragment] = rule
        self._combinations = {}
        self._by_first_terminal = {}
        for rule in combinations:
            if rule.key in self._combinations:
                raise GrammarError("duplicate combination rule %s" % rule.rule_id)
            self._combinations[rule.key] = rule
            self._by_first_terminal.setdefault(rule.terminals[0], []).append(rule)
        self._polar_tokens = frozenset(
            frag[0] for frag in self._dictionary if len(frag) == 1)

    @property
    def dictionary(self):
        return list(self._dictionary.values())

    @property
    def combinations(self):
        return list(self._combinations.values())

    def lookup_fragment(self, tokens):
        return self._dictionary.get(tuple(tokens))

    def lookup_combination(self, lhs, pattern):
        return self._combinations.get((lhs, tuple(pattern)))

    def combinations_starting_with(self, token):
        return self._by_first_terminal.get(token, ())

    def is_oov_token(self, token):
        """A token is OOV when it has no single-token dictionary rule."""
        return token not in self._polar_tokens

    def __len__(self):
        return len(self._dictionary) + len(self._combinations)

    def __eq__(self, other):
        if not isinstance(other, Grammar):
            return NotImplemented
        return (self.l_max == other.l_max and self.tau_c2 == other.tau_c2
                and self._dictionary == other._dictionary
                and self._combinations == other._combinations)

    def __repr__(self):
        return "Grammar(%d dictionary, %d combination, l_max=%d)" % (
            len(self._dictionary), len(self._combinations), self.l_max)


def lookup_fragment(grammar, tokens):
    if not tokens:
        raise ValueError("empty token sequence")
    return grammar.lookup_fragment(tokens)


def _fmt(x):
    return "%.17g" % x


def _dump_lines(grammar):
    yield "%s %s lmax=%d tau_c2=%s" % (HEADER_MAGIC, FORMAT_VERSION,
                                       grammar.l_max, _fmt(grammar.tau_c2))
    for frag in sorted(grammar._dictionary):
        r = grammar._dictionary[frag]
        yield "D %s %s %s %d %d\t%s" % (r.lhs.value, _fmt(r.dist.p_neg),
                                        _fmt(r.dist.p_pos), r.count_neg,
                                        r.count_pos, " ".join(r.fragment))
    for r in sorted(grammar._combinations.values(), key=lambda c: c.rule_id):
        fields = ["C", r.lhs.value, r.rule_type.value,
                  ",".join(_fmt(t) for t in r.theta)]
        if r.type_counts:
            fields.append("counts=" + ",".join(
                "%s:%d" % (k, r.type_counts[k]) for k in sorted(r.type_counts)))
        yield " ".join(fields) + "\t" + pattern_text(r.pattern)


def save_grammar(grammar, sink):
    """Write ``grammar`` to a path or text stream."""
    text = "".join(line + "\n" for line in _dump_lines(grammar))
    if hasattr(sink, "write"):
        sink.write(text)
    else:
        with open(sink, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)


def _parse_header(line):
    parts = line.split()
    if len(parts) < 2 or parts[0] != HEADER_MAGIC:
        raise GrammarParseError(1, "missing 'sgrammar' header")
    if parts[1] != FORMAT_VERSION:
        raise GrammarParseError(1, "unsupported version %r" % parts[1])
    opts = {}
    for p in parts[2:]:
        k, sep, v = p.partition("=")
        if not sep:
            raise GrammarParseError(1, "bad header field %r" % p)
        opts[k] = v
    try:
        l_max = int(opts.get("lmax", DEFAULT_LMAX))
        tau_c2 = float(opts.get("tau_c2", DEFAULT_TAU_C2))
    except ValueError as e:
        raise GrammarParseError(1, str(e))
    return l_max, tau_c2


def _parse_rule(lineno, line):
    head, sep, body = line.partition("\t")
    if not sep or not body:
        raise GrammarParseError(lineno, "expected <fields><TAB><tokens>")
    f = head.split()
    try:
        if f[0] == "D":
            if len(f) != 6:
                raise GrammarParseError(lineno, "dictionary line needs 6 fields")
            dist = PolarityDist(float(f[2]), float(f[3]))
            return DictionaryRule(NonTerminal(f[1]), tuple(body.split(" ")),
                                  dist, int(f[4]), int(f[5]))
        if f[0] == "C":
            if len(f) not in (4, 5):
                raise GrammarParseError(lineno, "combination line needs 4-5 fields")
            counts = {}
            if len(f) == 5:
                if not f[4].startswith("counts="):
                    raise GrammarParseError(lineno, "bad counts field %r" % f[4])
                for item in f[4][len("counts="):].split(","):
                    k, _, v = item.partition(":")
                    counts[RuleType(k).value] = int(v)
            theta = tuple(float(t) for t in f[3].split(","))
            return CombinationRule(NonTerminal(f[1]), parse_pattern(body),
                                   RuleType(f[2]), theta, counts)
    except GrammarParseError:
        raise
    except (ValueError, IndexError) as e:
        raise GrammarParseError(lineno, str(e))
    raise GrammarParseError(lineno, "unknown record type %r" % f[0])


def load_grammar(source):
    """Read a grammar from a path or text stream."""
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source, encoding="utf-8") as f:
            text = f.read()
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise GrammarParseError(1, "empty grammar file")
    l_max, tau_c2 = _parse_header(lines[0])
    dictionary, combinations = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        rule = _parse_rule(lineno, line)
        if isinstance(rule, DictionaryRule):
            dictionary.append(rule)
        else:
            combinations.append(rule)
    return Grammar(dictionary, combinations, l_max=l_max, tau_c2=tau_c2)
