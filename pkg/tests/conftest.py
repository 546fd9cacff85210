import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from sentparse.grammar import (CombinationRule, DictionaryRule, Grammar,  # noqa: E402
                               NonTerminal, PolarityDist, RuleType)

N, P = NonTerminal.N, NonTerminal.P

WORKED_SENTENCE = "The movie is not very good, but i still like it"


def drule(lhs, text, p_pos, cn=0, cp=0):
    return DictionaryRule(lhs, tuple(text.split()),
                          PolarityDist(1.0 - p_pos, p_pos), cn, cp)


@pytest.fixture
def worked_grammar():
    """Worked-example grammar: three dictionary and three combination rules."""
    return Grammar(
        [drule(P, "the movie is", 0.52), drule(P, "good", 0.87),
         drule(P, "i still like it", 0.85)],
        [CombinationRule(P, ("very", P), RuleType.STRENGTHEN, (0.0, 3.0)),
         CombinationRule(N, ("not", P), RuleType.NEGATION, (3.0, -2.5)),
         CombinationRule(P, (N, "but", P), RuleType.CONTRAST, (0.0, -1.0, 2.0))])


@pytest.fixture
def hit_weights():
    return {"CombHit": 1.0, "DictHit": 1.0}


# -- acceptance report ---------------------------------------------------------

ACCEPTANCE = []


def record_acceptance(name, ok, detail=""):
    line = "ACCEPTANCE %-22s %s  %s" % (name, "PASS" if ok else "FAIL", detail)
    ACCEPTANCE.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
