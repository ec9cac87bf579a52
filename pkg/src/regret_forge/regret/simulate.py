"""Step-by-step regret of a script against an MWA schedule.

Two independent evaluators:

* ``step_regrets``: vectorized over steps. A team-structured script keeps the
  experts on at most three gain levels (single expert, rest of team A,
  team B), so the policy mass only needs a softmax over three weighted groups.
* ``ledger_step_regrets``: literal k-vector simulation through
  ``policy_probabilities``, one step at a time. Slow, used as the oracle.
"""

from __future__ import annotations

import math
from typing import Optional, Tuple

import numpy as np

from ..adversaries import A, B, S, AdversaryScript
from ..core import EtaSchedule, GainLedger, GameConfig, RegretReport
from ..errors import BadExpertCount, LengthMismatch, NonPositiveTolerance, TooLarge
from ..policies import mwa_weights, policy_probabilities

CHUNK = 1 << 20
MAX_GEOMETRIC_STEPS = 200_000_000

# groups advanced by each action code: rows = A, B, S, I; cols = single, rest of A, team B
_ADVANCES = np.array(
    [[1, 1, 0], [0, 0, 1], [1, 0, 0], [0, 0, 0]],
    dtype=bool,
)


def _group_masses(levels: np.ndarray, counts: np.ndarray, rates: np.ndarray) -> np.ndarray:
    """Softmax mass per group, shape (3, n); empty groups get mass 0."""
    present = counts > 0
    lv = levels.astype(float)
    top = np.max(np.where(present[:, None], lv, -np.inf), axis=0)
    with np.errstate(invalid="ignore"):
        z = rates[None, :] * (lv - top[None, :])
    z = np.where(lv == top[None, :], 0.0, z)
    z = np.where(present[:, None], z, -np.inf)
    w = counts[:, None] * np.exp(z)
    return w / w.sum(axis=0)


def _regret_from_masses(acts: np.ndarray, levels: np.ndarray, counts: np.ndarray, masses) -> np.ndarray:
    adv = _ADVANCES[acts].T  # (3, n)
    present = (counts > 0)[:, None]
    top = np.max(np.where(present, levels, -1), axis=0)
    # the benchmark grows iff an advanced group sits at the top level
    grows = np.any(adv & present & (levels == top[None, :]), axis=0)
    m_adv = np.sum(np.where(adv, masses, 0.0), axis=0)
    m_rest = np.sum(np.where(adv, 0.0, masses), axis=0)
    return np.where(grows, m_rest, -m_adv)


def _chunk_regrets(acts, levels, counts, sched: EtaSchedule, ts) -> np.ndarray:
    if not sched.is_random:
        rates = sched.rates(ts)
        return _regret_from_masses(acts, levels, counts, _group_masses(levels, counts, rates))
    prof = sched.profile(ts)
    out = np.empty(acts.size)
    order = np.argsort(prof.index, kind="stable")
    bounds = np.searchsorted(prof.index[order], np.arange(len(prof.keys) + 1))
    for u, (etas, ws) in enumerate(prof.keys):
        sel = order[bounds[u]:bounds[u + 1]]
        if sel.size == 0:
            continue
        lv = levels[:, sel]
        acc = np.zeros(sel.size)
        for eta, w in zip(etas, ws):
            if w == 0.0:
                continue
            m = _group_masses(lv, counts, np.full(sel.size, eta))
            acc += w * _regret_from_masses(acts[sel], lv, counts, m)
        out[sel] = acc
    return out


def step_regrets(script: AdversaryScript, sched: EtaSchedule, n: Optional[int] = None) -> np.ndarray:
    """Expected regret of each of the first ``n`` steps (all steps if finite)."""
    acts = script.actions(n)
    a, b = script.split
    counts = np.array([1, a - 1, b])
    out = np.empty(acts.size)
    start = np.zeros(3, dtype=np.int64)
    for lo in range(0, acts.size, CHUNK):
        ch = acts[lo:lo + CHUNK]
        inc = _ADVANCES[ch].T.astype(np.int64)
        after = start[:, None] + np.cumsum(inc, axis=1)
        before = np.concatenate([start[:, None], after[:, :-1]], axis=1)
        ts = np.arange(lo + 1, lo + ch.size + 1)
        out[lo:lo + ch.size] = _chunk_regrets(ch, before, counts, sched, ts)
        start = after[:, -1]
    return out


def ledger_step_regrets(
    script: AdversaryScript, sched: EtaSchedule, n: Optional[int] = None, random_mode: str = "mixture"
) -> np.ndarray:
    """Per-step expected regret from an explicit k-vector of cumulative gains."""
    acts = script.actions(n)
    a, b = script.split
    k = a + b
    members = {A: list(range(a)), B: list(range(a, k)), S: [0]}
    gains = np.zeros(k, dtype=np.int64)
    out = np.empty(acts.size)
    for i, act in enumerate(acts):
        adv = members.get(int(act), [])
        probs = policy_probabilities(sched, GainLedger(tuple(gains), i + 1), i + 1, random_mode)
        new = gains.copy()
        new[adv] += 1
        out[i] = (new.max() - gains.max()) - sum(probs[j] for j in adv)
        gains = new
    return out


def ledger_rate_regrets(script: AdversaryScript, sched: EtaSchedule, n: Optional[int] = None):
    """Per step, the support of the rate and the regret under each rate.

    Returns a list of (rates, weights, regrets) triples, one per step.
    """
    acts = script.actions(n)
    a, b = script.split
    k = a + b
    members = {A: list(range(a)), B: list(range(a, k)), S: [0]}
    gains = np.zeros(k, dtype=np.int64)
    out = []
    for i, act in enumerate(acts):
        adv = members.get(int(act), [])
        ledger = GainLedger(tuple(gains), i + 1)
        new = gains.copy()
        new[adv] += 1
        grow = new.max() - gains.max()
        sup = sched.support_at(i + 1)
        regs = [grow - sum(mwa_weights(ledger, eta)[j] for j in adv) for eta, _ in sup]
        out.append((np.array([e for e, _ in sup]), np.array([w for _, w in sup]), np.array(regs)))
        gains = new
    return out


def split_parts(acts: np.ndarray, regrets: np.ndarray, weights=None) -> Tuple[float, float]:
    """(loop part, straight part): team moves vs single-expert moves."""
    r = regrets if weights is None else regrets * weights
    loop = math.fsum(r[(acts == A) | (acts == B)])
    straight = math.fsum(r[acts == S])
    return loop, straight


def geometric_steps(delta: float, tail_tol: float, max_steps: int = MAX_GEOMETRIC_STEPS) -> int:
    """Smallest n with (1-delta)^(n+1)/delta <= tail_tol."""
    if tail_tol <= 0:
        raise NonPositiveTolerance(f"tail tolerance must be > 0, got {tail_tol!r}")
    if delta >= 1.0:
        return 0
    lq = math.log1p(-delta)
    n = max(0, math.ceil((math.log(tail_tol * delta)) / lq) - 1)
    if n > max_steps:
        raise TooLarge(f"truncation needs {n} steps (limit {max_steps})")
    return n


def discount_weights(delta: float, n: int, start: int = 1) -> np.ndarray:
    """(1-delta)^t for t = start..start+n-1."""
    if delta >= 1.0:
        return np.zeros(n)
    return np.exp(np.arange(start, start + n) * math.log1p(-delta))


def _check_k(script: AdversaryScript, cfg: GameConfig) -> None:
    if script.k != cfg.k:
        raise BadExpertCount(f"script is for k={script.k}, config has k={cfg.k}")


def exact_regret_script(
    script: AdversaryScript,
    sched: EtaSchedule,
    cfg: GameConfig,
    tail_tol: float = 1e-12,
    method: str = "vectorized",
) -> RegretReport:
    """Exact expected regret of a deterministic script.

    Geometric horizons weight step t by (1-delta)^t (the game reaches step t
    with that probability); infinite scripts are truncated once the
    remaining weight is at most ``tail_tol``, which bounds the error.
    """
    _check_k(script, cfg)
    hz = cfg.horizon
    sim = step_regrets if method == "vectorized" else ledger_step_regrets
    if hz.is_finite:
        if not script.is_finite or len(script) != hz.steps:
            have = "an infinite" if not script.is_finite else f"{len(script)}"
            raise LengthMismatch(f"script has {have} steps, horizon T={hz.steps}")
        acts = script.actions()
        loop, straight = split_parts(acts, sim(script, sched))
        return RegretReport.from_parts(loop, straight, hz)
    delta = hz.stop_prob
    bound = 0.0
    if script.is_finite:
        n = len(script)
    else:
        n = geometric_steps(delta, tail_tol)
        bound = 0.0 if delta >= 1.0 else math.exp((n + 1) * math.log1p(-delta)) / delta
    acts = script.actions(n)
    regs = sim(script, sched, n) if n else np.zeros(0)
    loop, straight = split_parts(acts, regs, discount_weights(delta, n))
    return RegretReport.from_parts(loop, straight, hz, bound)
