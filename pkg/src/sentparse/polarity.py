"""Polarity model: how each rule category turns sub-span polarity into a span's.

Combination rules use a logistic composition of their slot probabilities,
fitted per rule by stochastic gradient descent on squared residuals.
"""

import logging
import math
import random
from typing import NamedTuple

from .grammar import CombinationRule, PolarityDist

log = logging.getLogger(__name__)

DEFAULT_ALPHA = 0.01
DEFAULT_EPSILON = 1e-8
DEFAULT_MAX_EPOCHS = 200
DEFAULT_MIN_UPDATES = 200_000


class PolarityError(ArithmeticError):
    """Polarity evaluation is undefined for the given inputs."""


class ConfigurationError(ValueError):
    pass


def logistic(x):
    # branch on sign so exp never overflows
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


def eval_dictionary(rule):
    return rule.dist


def eval_glue(left, right, lhs):
    """Normalized product of two independent spans, reported for ``lhs``."""
    # a uniform side is the identity of the product; return the other as-is
    if left.p_neg == left.p_pos:
        return right
    if right.p_neg == right.p_pos:
        return left
    same = left.prob(lhs) * right.prob(lhs)
    other = left.prob(lhs.opposite()) * right.prob(lhs.opposite())
    denom = same + other
    if denom == 0.0:
        raise PolarityError("glue of contradictory certain distributions "
                            "%r and %r" % (left, right))
    return PolarityDist.from_prob(lhs, same / denom)


def eval_auxiliary(inner):
    return inner


def composition_input(rule, subs):
    """Feature vector (1, P(slot_1), ..., P(slot_K)) for a combination rule.

    ``subs`` holds one PolarityDist per slot, in pattern order.
    """
    slots = rule.slots
    if len(subs) != len(slots):
        raise ConfigurationError("%s has %d slots, got %d sub-spans"
                                 % (rule.rule_id, len(slots), len(subs)))
    return (1.0,) + tuple(d.prob(s.polarity) for d, s in zip(subs, slots))


def linear_response(theta, x):
    if len(theta) != len(x):
        raise ConfigurationError("theta length %d does not match input "
                                 "length %d" % (len(theta), len(x)))
    return math.fsum(t * v for t, v in zip(theta, x))


def eval_combination(rule, subs):
    x = composition_input(rule, subs)
    p = logistic(linear_response(rule.theta, x))
    return PolarityDist.from_prob(rule.lhs.polarity, p)


def squared_cost(theta, data):
    """J(theta) = 1/2 * sum (h(theta.x) - y)^2 over ``(x, y)`` pairs."""
    return 0.5 * math.fsum((logistic(linear_response(theta, x)) - y) ** 2
                           for x, y in data)


def cost_gradient(theta, data):
    grad = [0.0] * len(theta)
    for x, y in data:
        h = logistic(linear_response(theta, x))
        c = (h - y) * h * (1.0 - h)
        for j, xj in enumerate(x):
            grad[j] += c * xj
    return grad


class FitResult(NamedTuple):
    theta: tuple
    converged: bool
    epochs: int


def fit_rule_params(n_params, data, alpha=DEFAULT_ALPHA, epsilon=DEFAULT_EPSILON,
                    rng=None, max_epochs=None):
    """Fit composition parameters by per-instance SGD from theta = 0.

    ``data`` is a list of ``(x, y)`` with ``x[0] == 1``.  ``n_params`` may
    also be a CombinationRule, whose slot count fixes the parameter length.
    Each epoch visits every instance once in an order drawn from ``rng``.
    Training stops once the squared parameter change over an epoch drops
    below ``epsilon``.  The epoch cap defaults to enough passes for
    DEFAULT_MIN_UPDATES single-instance steps (and never fewer than
    DEFAULT_MAX_EPOCHS); on hitting it the lowest-cost parameters seen at
    an epoch boundary are returned with ``converged=False``.
    """
    if isinstance(n_params, CombinationRule):
        n_params = len(n_params.slots) + 1
    if not data:
        raise ValueError("no training data")
    if alpha <= 0 or epsilon <= 0:
        raise ValueError("alpha and epsilon must be positive")
    for x, _ in data:
        if len(x) != n_params or x[0] != 1.0:
            raise ConfigurationError("bad composition input %r" % (x,))
    if max_epochs is None:
        max_epochs = max(DEFAULT_MAX_EPOCHS,
                         -(-DEFAULT_MIN_UPDATES // len(data)))
    rng = rng if rng is not None else random.Random(0)
    theta = [0.0] * n_params
    best = (squared_cost(theta, data), tuple(theta))
    order = list(range(len(data)))
    for epoch in range(1, max_epochs + 1):
        before = list(theta)
        rng.shuffle(order)
        for m in order:
            x, y = data[m]
            h = logistic(linear_response(theta, x))
            c = alpha * (h - y) * h * (1.0 - h)
            for j, xj in enumerate(x):
                theta[j] -= c * xj
        if sum((a - b) ** 2 for a, b in zip(theta, before)) < epsilon:
            return FitResult(tuple(theta), True, epoch)
        cost = squared_cost(theta, data)
        if cost < best[0]:
            best = (cost, tuple(theta))
    log.warning("polarity fit did not converge in %d epochs", max_epochs)
    return FitResult(best[1], False, max_epochs)
