"""Fixed English function-word list used to filter dictionary fragments.

The list is versioned: changing it changes which fragments survive mining,
so bump ``STOPWORDS_VERSION`` on any edit.
"""

import string

STOPWORDS_VERSION = 1

STOPWORDS = frozenset("""
a about above after again against all am an and any are as at
be because been before being below between both but by
can could did do does doing down during
each few for from further
had has have having he her here hers herself him himself his how
i if in into is it its itself
just me more most my myself
no nor not now of off on once only or other our ours ourselves out over own
same she should so some such
than that the their theirs them themselves then there these they this those
through to too
under until up very
was we were what when where which while who whom why will with would
you your yours yourself yourselves
s t d ll m o re ve y
also although among anyone anything became become cannot ever every
however may might must neither often perhaps quite rather since
still though thus upon us whether yet
""".split())

PUNCTUATION = frozenset(string.punctuation) | frozenset(
    ["--", "...", "``", "''", "-lrb-", "-rrb-"])


def is_function_token(token):
    """True for stop words and tokens made only of punctuation characters."""
    if token in STOPWORDS or token in PUNCTUATION:
        return True
    return all(ch in string.punctuation for ch in token)


def is_function_fragment(tokens):
    return all(is_function_token(t) for t in tokens)
