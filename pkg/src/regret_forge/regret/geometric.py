"""Closed-form regret under a geometric stopping time.

Step t is played with probability (1-delta)^t. Loop and straight-then-loop
series are summed exactly; the pure straight series is truncated with an
analytic tail bound.
"""

from __future__ import annotations

import math
from typing import Optional, Tuple, Union

import numpy as np
from scipy.special import expit

from ..adversaries import canonical_split
from ..core import Horizon, RegretReport
from ..errors import BadDelta, DomainError, NonPositiveTolerance, TooLarge
from .formulas import straight_step_regret

MAX_TERMS = 200_000_000
CHUNK = 1 << 20


def _check_delta(delta: float) -> float:
    delta = float(delta)
    if not (0.0 < delta <= 1.0):
        raise BadDelta(f"delta must lie in (0, 1], got {delta!r}")
    return delta


def _check_rate(eta: float) -> float:
    eta = float(eta)
    if not eta >= 0.0:
        raise DomainError(f"rate must be >= 0, got {eta!r}")
    return eta


def _loop_tail(delta: float, eta: float, ell) -> np.ndarray:
    """Discounted value of looping at gap l <-> l+1, measured from step l+1.

    Equals [p(l) - (1-delta) p(l+1)] / (1 - (1-delta)^2) with p(d) = 1/(e^{eta d}+1),
    using p(l) - p(l+1) = (tau-1) u / ((1+u)(tau+u)), u = e^{-eta l}.
    """
    ell = np.asarray(ell, dtype=float)
    u = np.exp(-eta * ell)
    tau = math.exp(eta)
    num = math.expm1(eta) * u / ((1.0 + u) * (tau + u)) + delta * u / (tau + u)
    return num / (delta * (2.0 - delta))


def _log_q(delta: float) -> float:
    return math.log1p(-delta) if delta < 1.0 else -math.inf


def geometric_sl_regret(delta: float, eta: float, ell: Union[int, float], k: int = 2) -> RegretReport:
    """l straight steps, then looping between gaps l and l+1 forever."""
    if k != 2:
        raise DomainError("the straight-then-loop series is defined for k=2")
    delta, eta = _check_delta(delta), _check_rate(eta)
    hz = Horizon.geometric(delta)
    if ell == math.inf:
        return geometric_straight_regret(delta, eta, 2)
    if ell < 0 or int(ell) != ell:
        raise DomainError(f"straight length must be a nonnegative integer, got {ell!r}")
    ell = int(ell)
    if ell > MAX_TERMS:
        raise TooLarge(f"l={ell} exceeds {MAX_TERMS}")
    if delta == 1.0:
        return RegretReport.from_parts(0.0, 0.0, hz)
    lq = _log_q(delta)
    straight = _chunked_straight(lq, eta, 2, ell)
    loop = float(math.exp((ell + 1) * lq) * _loop_tail(delta, eta, ell))
    return RegretReport.from_parts(loop, straight, hz)


def geometric_sl_curve(delta: float, eta: float, ell_max: int) -> np.ndarray:
    """Regret of the straight-then-loop adversary for l = 0..ell_max."""
    delta, eta = _check_delta(delta), _check_rate(eta)
    if delta == 1.0:
        return np.zeros(ell_max + 1)
    lq = _log_q(delta)
    d = np.arange(ell_max + 1)
    terms = np.exp((d + 1) * lq) * straight_step_regret(d, eta, 2)
    prefix = np.concatenate([[0.0], np.cumsum(terms[:-1])])
    return prefix + np.exp((d + 1) * lq) * _loop_tail(delta, eta, d)


def geometric_loop_regret(delta: float, eta: float, k: int = 2, split: Optional[Tuple[int, int]] = None) -> RegretReport:
    """Looping from a tie forever; odd k loops parties of sizes m and m+1."""
    delta, eta = _check_delta(delta), _check_rate(eta)
    hz = Horizon.geometric(delta)
    if delta == 1.0:
        return RegretReport.from_parts(0.0, 0.0, hz)
    a, b = canonical_split(k) if split is None else split
    q = 1.0 - delta
    # one cycle: b/k at the tie, then -q b/(a tau + b)
    if math.isinf(eta):
        cycle = b / k
    else:
        denom = a * math.exp(eta) + b
        cycle = a * b * math.expm1(eta) / (k * denom) + delta * b / denom
    loop = q / (delta * (2.0 - delta)) * cycle
    return RegretReport.from_parts(loop, 0.0, hz)


def _straight_tail_bound(lq: float, delta: float, eta: float, k: int, D: int) -> float:
    """(1-delta)^{D+2}/delta * g(D+1): bound on the terms past d = D."""
    return math.exp((D + 2) * lq) / delta * straight_step_regret(D + 1, eta, k)


def _chunked_straight(lq: float, eta: float, k: int, n: int) -> float:
    """sum_{d<n} (1-delta)^{d+1} g(d)."""
    parts = []
    for lo in range(0, n, CHUNK):
        d = np.arange(lo, min(n, lo + CHUNK))
        parts.append(float(np.sum(np.exp((d + 1) * lq) * straight_step_regret(d, eta, k))))
    return math.fsum(parts)


def geometric_straight_regret(delta: float, eta: float, k: int = 2, tail_tol: float = 1e-12) -> RegretReport:
    """Advance one expert forever; truncated once the analytic tail bound <= tail_tol."""
    delta, eta = _check_delta(delta), _check_rate(eta)
    if not tail_tol > 0:
        raise NonPositiveTolerance(f"tail tolerance must be > 0, got {tail_tol!r}")
    hz = Horizon.geometric(delta)
    if delta == 1.0:
        return RegretReport.from_parts(0.0, 0.0, hz)
    q = 1.0 - delta
    g0 = (k - 1) / k
    if eta == 0.0:
        return RegretReport.from_parts(0.0, q / delta * g0, hz)
    if math.isinf(eta):
        return RegretReport.from_parts(0.0, q * g0, hz)
    lq = _log_q(delta)
    # smallest D whose tail bound is within tolerance: doubling then bisection
    hi = 1
    while _straight_tail_bound(lq, delta, eta, k, hi) > tail_tol:
        hi *= 2
        if hi > 2 * MAX_TERMS:
            raise TooLarge(f"straight series needs more than {MAX_TERMS} terms")
    lo = 0
    if _straight_tail_bound(lq, delta, eta, k, 0) <= tail_tol:
        hi = 0
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _straight_tail_bound(lq, delta, eta, k, mid) <= tail_tol:
            hi = mid
        else:
            lo = mid
    D = hi
    if D + 1 > MAX_TERMS:
        raise TooLarge(f"straight series needs {D + 1} terms")
    total = _chunked_straight(lq, eta, k, D + 1)
    bound = _straight_tail_bound(lq, delta, eta, k, D)
    return RegretReport.from_parts(0.0, total, hz, bound)


def lag_prob(eta: float):
    """p(d) = 1/(e^{eta d}+1) as a vectorized function of d."""
    return lambda d: expit(-eta * np.asarray(d, dtype=float))
