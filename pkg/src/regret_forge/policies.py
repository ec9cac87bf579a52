"""Multiplicative-weights probability vectors for the four learning-rate families."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.special import expit, logsumexp

from .core import EtaSchedule, GainLedger, GapState, Leader
from .errors import DomainError


@dataclass(frozen=True)
class ProbabilityVector:
    probs: Tuple[float, ...]

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probs)
        if any(not (-1e-15 <= p <= 1.0 + 1e-15) for p in probs):
            raise ValueError(f"probabilities out of [0, 1]: {probs}")
        if abs(math.fsum(probs) - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {math.fsum(probs)!r}")
        object.__setattr__(self, "probs", probs)

    def __len__(self):
        return len(self.probs)

    def __getitem__(self, i):
        return self.probs[i]

    def as_array(self) -> np.ndarray:
        return np.array(self.probs)


def softmax_gains(gains, rate: float) -> np.ndarray:
    """exp(rate*G_i) / sum_j exp(rate*G_j), shifted by max G to avoid overflow."""
    g = np.asarray(gains, dtype=float)
    z = rate * (g - g.max())
    w = np.exp(z)
    return w / w.sum()


def mwa_weights(gains: GainLedger, rate: float) -> ProbabilityVector:
    if not rate >= 0.0:
        raise DomainError(f"rate must be >= 0, got {rate!r}")
    return ProbabilityVector(tuple(softmax_gains(gains.cumulative_gains, rate)))


def policy_probabilities(
    sched: EtaSchedule, gains: GainLedger, t: int, random_mode: str = "mixture"
) -> ProbabilityVector:
    """Probability vector the player uses at step ``t``.

    For the random family the default ``"mixture"`` mode draws a rate and then
    plays softmax, so the vector is E[softmax(eta*G)]. ``"mean_weights"``
    normalizes E[exp(eta*G_i)] instead.
    """
    if t < 1:
        raise DomainError(f"t must be >= 1, got {t}")
    support = sched.support_at(t)
    g = np.asarray(gains.cumulative_gains, dtype=float)
    if len(support) == 1:
        return ProbabilityVector(tuple(softmax_gains(g, support[0][0])))
    etas = np.array([e for e, _ in support])
    ws = np.array([w for _, w in support])
    if random_mode == "mixture":
        probs = sum(w * softmax_gains(g, e) for e, w in zip(etas, ws))
    elif random_mode == "mean_weights":
        log_w = logsumexp(np.outer(etas, g), b=ws[:, None], axis=0)
        probs = np.exp(log_w - log_w.max())
        probs = probs / probs.sum()
    else:
        raise ValueError(f"unknown random_mode {random_mode!r}")
    return ProbabilityVector(tuple(probs))


def lagging_mass(d, rate, k: int = 2):
    """Mass MWA puts on the k-1 experts trailing a single leader by ``d``.

    (k-1)/(e^{rate*d}+k-1); vectorized over ``d`` and ``rate``. A zero gap
    gives (k-1)/k even for an infinite rate.
    """
    d = np.asarray(d, dtype=float)
    if np.any(d < 0):
        raise DomainError("gap must be nonnegative")
    x = np.where(d == 0, 0.0, np.asarray(rate, dtype=float) * d)
    out = expit(math.log(k - 1) - x)
    return float(out) if np.ndim(out) == 0 else out


def two_expert_lag_prob(d, rate):
    """p(d) = 1/(e^{rate*d}+1), the mass on the lagging of two experts."""
    return lagging_mass(d, rate, 2)


def team_correct_prob(state: GapState, rate: float) -> float:
    """Mass MWA puts on the leading group of a reduced state.

    For a tie this is the mass on team A, a/k.
    """
    a, b = state.sizes
    k = a + b
    d = state.gap
    if state.leader is Leader.TIED:
        return a / k
    n_lead, n_lag = {
        Leader.TEAM_A: (a, b),
        Leader.TEAM_B: (b, a),
        Leader.SINGLE: (1, k - 1),
    }[state.leader]
    return float(expit(rate * d + math.log(n_lead / n_lag)))
