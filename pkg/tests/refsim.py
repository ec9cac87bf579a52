"""Reference step-by-step simulation in plain Python floats.

Independent of the package: gains are a k-list, the player's mass comes from
a max-shifted softmax, and each step's regret is the growth of the maximum
minus the mass on the experts that moved.
"""

from __future__ import annotations

import math


def softmax(gains, eta):
    if math.isinf(eta):
        top = max(gains)
        idx = [i for i, g in enumerate(gains) if g == top]
        return [1.0 / len(idx) if g == top else 0.0 for g in gains]
    m = max(gains)
    w = [math.exp(eta * (g - m)) for g in gains]
    s = sum(w)
    return [x / s for x in w]


def movers(action, a, k):
    if action == "A":
        return list(range(a))
    if action == "B":
        return list(range(a, k))
    if action == "S":
        return [0]
    return []


def expand(text):
    """'L*2 S I*3' -> list of single-letter actions."""
    out = []
    for tok in text.split():
        name, _, n = tok.partition("*")
        n = int(n) if n else 1
        out += (["A", "B"] if name == "L" else [name]) * n
    return out


def step_terms(actions, split, rate_support):
    """Per-step regret; ``rate_support(t)`` gives [(eta, w), ...]."""
    a, b = split
    k = a + b
    g = [0] * k
    terms = []
    for t, act in enumerate(actions, start=1):
        mv = movers(act, a, k)
        new = list(g)
        for i in mv:
            new[i] += 1
        grow = max(new) - max(g)
        r = 0.0
        for eta, w in rate_support(t):
            p = softmax(g, eta)
            r += w * (grow - sum(p[i] for i in mv))
        terms.append(r)
        g = new
    return terms


def finite_regret(actions, split, rate_support):
    return math.fsum(step_terms(actions, split, rate_support))


def discounted_regret(actions, split, rate_support, delta):
    terms = step_terms(actions, split, rate_support)
    q = 1.0 - delta
    return math.fsum(q ** t * r for t, r in enumerate(terms, start=1))


def const(eta):
    return lambda t: [(eta, 1.0)]
