"""Closed-form regret of the finite-horizon constructions.

All evaluators accept any schedule family. The random family enters through
linearity: each per-step term is averaged over that step's rate support.
"""

from __future__ import annotations

import math
from typing import Optional, Tuple, Union

import numpy as np
from scipy.special import expit

from ..adversaries import canonical_split, default_straight_len
from ..core import EtaSchedule, Horizon, RegretReport
from ..errors import BadLength, BadProbability, EvenK, ParityError, TooLarge, TooShort

# budget for (distinct rates) x (straight length) in the randomized formula
MAX_KEY_WORK = 2_000_000_000


def loop_cycle_regret(rate, split: Tuple[int, int]):
    """Regret of one loop cycle from a tie: b/k - b/(a e^rate + b).

    Written as a*b*(e^rate - 1)/(k (a e^rate + b)) to avoid cancellation.
    """
    a, b = split
    k = a + b
    rate = np.asarray(rate, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        tau = np.exp(rate)
        val = a * b * np.expm1(rate) / (k * (a * tau + b))
    val = np.where(np.isinf(tau), b / k, val)
    return float(val) if val.ndim == 0 else val


def straight_step_regret(d, rate, k: int):
    """(k-1)/(e^{rate d} + k-1): regret of advancing a lone leader at gap d."""
    d = np.asarray(d, dtype=float)
    x = np.where(d == 0, 0.0, np.asarray(rate, dtype=float) * d)
    val = expit(math.log(k - 1) - x)
    return float(val) if np.ndim(val) == 0 else val


def per_step(sched: EtaSchedule, ts: np.ndarray, fn, *args) -> np.ndarray:
    """``fn(rate, *args)`` at each step t, averaged over the rate support.

    ``args`` are arrays aligned with ``ts``.
    """
    ts = np.asarray(ts, dtype=np.int64)
    if not sched.is_random:
        return np.asarray(fn(sched.rates(ts), *args), dtype=float) * np.ones(ts.shape)
    prof = sched.profile(ts)
    out = np.empty(ts.shape)
    order = np.argsort(prof.index, kind="stable")
    bounds = np.searchsorted(prof.index[order], np.arange(len(prof.keys) + 1))
    for u, (etas, ws) in enumerate(prof.keys):
        sel = order[bounds[u]:bounds[u + 1]]
        if sel.size == 0:
            continue
        sub = [np.asarray(x)[sel] for x in args]
        out[sel] = sum(w * np.asarray(fn(np.full(sel.size, e), *sub), dtype=float) for e, w in zip(etas, ws))
    return out


def _as_schedule(rate_or_sched: Union[float, EtaSchedule]) -> EtaSchedule:
    if isinstance(rate_or_sched, EtaSchedule):
        return rate_or_sched
    return EtaSchedule.single(float(rate_or_sched))


def _check_lengths(T: int, ell: int) -> None:
    if T < 1:
        raise BadLength(f"T must be >= 1, got {T}")
    if ell < 0 or ell > T:
        raise BadLength(f"straight length {ell} outside [0, {T}]")


def lsdet_regret_terms(
    T: int, ell: int, sched: EtaSchedule, k: int = 2, split: Optional[Tuple[int, int]] = None
) -> Tuple[float, float]:
    """(loop part, straight part) of (T-l)/2 loops followed by l straight steps."""
    _check_lengths(T, ell)
    if (T - ell) % 2:
        raise ParityError(f"T - l = {T - ell} is odd")
    split = canonical_split(k) if split is None else split
    n = (T - ell) // 2
    loop = 0.0
    if n:
        loop = math.fsum(per_step(sched, 2 * np.arange(1, n + 1), lambda r: loop_cycle_regret(r, split)))
    straight = 0.0
    if ell:
        d = np.arange(ell)
        straight = math.fsum(per_step(sched, T - ell + d + 1, lambda r, dd: straight_step_regret(dd, r, k), d))
    return loop, straight


def lsdet_regret_formula(T: int, ell: Optional[int], sched: EtaSchedule, k: int = 2) -> RegretReport:
    if ell is None:
        ell = default_straight_len(T)
    loop, straight = lsdet_regret_terms(T, ell, _as_schedule(sched), k)
    return RegretReport.from_parts(loop, straight, Horizon.finite(T))


def odd_lsdet_regret_formula(
    T: int, ell: Optional[int], rate: Union[float, EtaSchedule], k: int
) -> RegretReport:
    """Loops between parties of sizes m and m+1 (k = 2m+1), then straight steps."""
    if k % 2 == 0:
        raise EvenK(f"k={k} is even")
    if ell is None:
        ell = default_straight_len(T)
    loop, straight = lsdet_regret_terms(T, ell, _as_schedule(rate), k, canonical_split(k))
    return RegretReport.from_parts(loop, straight, Horizon.finite(T))


def _rate_keys(sched: EtaSchedule, ts: np.ndarray):
    """(index per step, list of (rates, weights)) with duplicate supports merged."""
    if sched.is_random:
        prof = sched.profile(ts)
        return prof.index, prof.keys
    uniq, inv = np.unique(sched.rates(ts), return_inverse=True)
    return inv, [(np.array([u]), np.array([1.0])) for u in uniq]


def _parity_prefix(f: np.ndarray) -> np.ndarray:
    """Q[i] = sum of f[d] over d <= i with d = i (mod 2)."""
    q = np.empty_like(f)
    q[0::2] = np.cumsum(f[0::2])
    q[1::2] = np.cumsum(f[1::2])
    return q


def lsrand_regret_terms(
    T: int, ell: int, sched: EtaSchedule, k: int = 2, split: Optional[Tuple[int, int]] = None
) -> Tuple[float, float]:
    """(loop part, straight part) averaged over the 2R equally likely scripts.

    Script (j, c) idles c steps, loops j cycles, runs l straight steps and
    idles to the end. The loop part counts how many scripts use each step as
    a loop step; the straight part regroups terms by step s = 2j+d+1+c, where
    the admissible gaps d form one parity class of an interval, so per-rate
    parity prefix sums over d give each step's contribution in O(1).
    """
    _check_lengths(T, ell)
    split = canonical_split(k) if split is None else split
    R = (T - ell - 1) // 2
    if R < 1:
        raise TooShort(f"R = floor((T-l-1)/2) = {R} < 1")
    ts = np.arange(1, T + 1)
    loop = 0.0
    if R > 1:
        c = np.arange(1, R)
        cyc = per_step(sched, ts[1:2 * R], lambda r: loop_cycle_regret(r, split))  # steps 2..2R
        lc_even, lc_odd = cyc[0::2], cyc[1::2]  # steps 2c and 2c+1
        mult = (R - c).astype(float)
        loop = math.fsum(mult * lc_even[: R - 1]) + math.fsum(mult * lc_odd[: R - 1])
    straight = 0.0
    if ell:
        index, keys = _rate_keys(sched, ts)
        if len(keys) * ell > MAX_KEY_WORK:
            raise TooLarge(f"{len(keys)} distinct rates x l={ell} exceeds the work budget")
        d = np.arange(ell, dtype=float)
        order = np.argsort(index, kind="stable")
        bounds = np.searchsorted(index[order], np.arange(len(keys) + 1))
        parts = []
        for u, (etas, ws) in enumerate(keys):
            steps = ts[order[bounds[u]:bounds[u + 1]]]
            if steps.size == 0:
                continue
            f = sum(w * straight_step_regret(d, e, k) for e, w in zip(etas, ws))
            q = _parity_prefix(np.asarray(f, dtype=float))
            for c in (0, 1):
                top = steps - 1 - c  # largest admissible d
                par = top % 2
                lo = np.maximum(top - 2 * (R - 1), par)
                hi = np.where(top <= ell - 1, top, np.where((ell - 1) % 2 == par, ell - 1, ell - 2))
                ok = (top >= 0) & (hi >= lo)
                hi, lo = hi[ok], lo[ok]
                below = np.where(lo >= 2, q[np.maximum(lo - 2, 0)], 0.0)
                parts.append(math.fsum(q[hi] - below))
        straight = math.fsum(parts)
    return loop / (2 * R), straight / (2 * R)


def pure_loop_terms(T: int, sched: EtaSchedule, k: int = 2, split=None) -> Tuple[float, float]:
    """Regret of looping for all T steps, and of idling once then looping."""
    split = canonical_split(k) if split is None else split
    heads = per_step(sched, 2 * np.arange(1, T // 2 + 1), lambda r: loop_cycle_regret(r, split))
    tails = per_step(sched, 2 * np.arange(1, (T - 1) // 2 + 1) + 1, lambda r: loop_cycle_regret(r, split))
    return math.fsum(heads), math.fsum(tails)


def lsrand_regret_formula(T: int, ell: Optional[int], sched: EtaSchedule, k: int = 2, split=None) -> RegretReport:
    if ell is None:
        ell = default_straight_len(T, even_remainder=False)
    loop, straight = lsrand_regret_terms(T, ell, _as_schedule(sched), k, split)
    return RegretReport.from_parts(loop, straight, Horizon.finite(T))


def lsrandpp_regret_formula(
    T: int, ell: Optional[int], p: float, sched: EtaSchedule, k: int = 2, split=None
) -> RegretReport:
    """p times the randomized construction plus (1-p) times pure looping."""
    if not (0.0 <= p <= 1.0):
        raise BadProbability(f"mix probability {p!r} outside [0, 1]")
    if ell is None:
        ell = default_straight_len(T, even_remainder=False)
    sched = _as_schedule(sched)
    loop, straight = 0.0, 0.0
    if p > 0:
        lo, st = lsrand_regret_terms(T, ell, sched, k, split)
        loop, straight = p * lo, p * st
    else:
        _check_lengths(T, ell)
        if (T - ell - 1) // 2 < 1:
            raise TooShort("R < 1")
    if p < 1:
        heads, tails = pure_loop_terms(T, sched, k, split)
        loop += (1.0 - p) / 2 * (heads + tails)
    return RegretReport.from_parts(loop, straight, Horizon.finite(T))
