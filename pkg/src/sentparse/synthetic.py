"""Planted-lexicon corpora for end-to-end checks of induction and ranking.

Sentences are a neutral opener followed by one of four templates over a
small polar lexicon: ``X``, ``not X``, ``very X`` and ``X but Y``.  Training
labels are flipped with a template-dependent probability, so a bare word
is a noisier cue than the same word under ``very``; that gap is what makes
the intensifier learnable as a strengthening rule.
"""

import random

from .corpus import Corpus, LabeledSentence
from .grammar import Polarity

POSITIVE = ("great", "good", "wonderful", "excellent", "superb", "charming",
            "brilliant", "delightful")
NEGATIVE = ("awful", "bad", "terrible", "boring", "dull", "poor", "horrible",
            "weak")
OPENERS = ("the movie is", "this film is", "the plot is", "the acting is",
           "the story seems", "overall it is")

PLAIN, NOT, VERY, BUT = "plain", "not", "very", "but"

# template -> (training share, probability the training label is correct)
# Negation stays a minority template so bare words still clear the slot
# confidence threshold before any negation rule is known.
TRAIN_MIX = {PLAIN: (0.50, 0.88), NOT: (0.15, 0.97), VERY: (0.25, 1.0),
             BUT: (0.10, 0.97)}
TEST_MIX = {NOT: 1 / 3, VERY: 1 / 3, BUT: 1 / 3}


def word_polarity(word):
    if word in POSITIVE:
        return Polarity.POS
    if word in NEGATIVE:
        return Polarity.NEG
    return None


def make_sentence(rng, template, positive=POSITIVE, negative=NEGATIVE):
    """Return ``(text, true_label)`` for one instance of ``template``."""
    opener = rng.choice(OPENERS)
    pol = rng.choice((Polarity.POS, Polarity.NEG))
    x = rng.choice(positive if pol is Polarity.POS else negative)
    if template == PLAIN:
        return "%s %s ." % (opener, x), pol
    if template == NOT:
        return "%s not %s ." % (opener, x), pol.opposite()
    if template == VERY:
        return "%s very %s ." % (opener, x), pol
    if template == BUT:
        y = rng.choice(negative if pol is Polarity.POS else positive)
        return "%s %s but %s ." % (opener, x, y), pol.opposite()
    raise ValueError("unknown template %r" % template)


def _draw(rng, mix):
    names = sorted(mix)
    weights = [mix[n] if not isinstance(mix[n], tuple) else mix[n][0]
               for n in names]
    return rng.choices(names, weights)[0]


def training_corpus(n, seed, positive=POSITIVE, negative=NEGATIVE, mix=None):
    """``n`` noisy training sentences; ``mix`` maps template -> (share, accuracy)."""
    rng = random.Random(seed)
    mix = mix or TRAIN_MIX
    out = []
    for _ in range(n):
        template = _draw(rng, mix)
        text, label = make_sentence(rng, template, positive, negative)
        if rng.random() >= mix[template][1]:
            label = label.opposite()
        out.append(LabeledSentence.from_text(text, label))
    return Corpus(out)


def test_corpus(n, seed, mix=None, positive=POSITIVE, negative=NEGATIVE):
    """Noise-free compositional sentences (no bare-word template by default)."""
    rng = random.Random(seed)
    mix = mix or TEST_MIX
    out = []
    for _ in range(n):
        text, label = make_sentence(rng, _draw(rng, mix), positive, negative)
        out.append(LabeledSentence.from_text(text, label))
    return Corpus(out)
