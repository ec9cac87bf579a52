"""Seeded Monte Carlo estimate of expected regret.

Each trial draws a script from the adversary distribution, a stopping time
for geometric horizons, and one learning rate per step for the random
family. Given those draws the player's expected gain per step is exact, so
only the adversary, horizon and rate randomness is sampled. Per-step values
come from the k-vector ledger, independent of the vectorized evaluators.
"""

from __future__ import annotations

import math
from typing import Tuple, Union

import numpy as np

from ..adversaries import AdversaryDistribution, AdversaryScript, as_distribution
from ..core import EtaSchedule, GameConfig
from ..errors import BadExpertCount, LengthMismatch, TooLarge, ValidationError
from .simulate import ledger_rate_regrets

MAX_STEPS = 1_000_000
_DRAW_BUDGET = 4_000_000


def _script_table(script: AdversaryScript, sched: EtaSchedule, n: int):
    """Padded (n, J) regret and cumulative-weight tables for one script."""
    rows = ledger_rate_regrets(script, sched, n)
    J = max((len(r[0]) for r in rows), default=1)
    regs = np.zeros((n, J))
    cum = np.ones((n, J))
    for t, (_, ws, rs) in enumerate(rows):
        regs[t, : rs.size] = rs
        cum[t, : ws.size] = np.cumsum(ws)
        cum[t, ws.size - 1] = 1.0
    return regs, cum


def _realized(regs, cum, lengths, rng, random_rate: bool) -> np.ndarray:
    n = regs.shape[0]
    if not random_rate:
        csum = np.concatenate([[0.0], np.cumsum(regs[:, 0])])
        return csum[np.minimum(lengths, n)]
    out = np.empty(lengths.size)
    per = max(1, _DRAW_BUDGET // max(1, n * regs.shape[1]))
    for lo in range(0, lengths.size, per):
        m = min(per, lengths.size - lo)
        u = rng.random((m, n))
        j = (u[:, :, None] >= cum[None, :, :]).sum(axis=2)
        j = np.minimum(j, regs.shape[1] - 1)
        vals = regs[np.arange(n)[None, :], j]
        keep = np.arange(n)[None, :] < lengths[lo:lo + m, None]
        out[lo:lo + m] = np.where(keep, vals, 0.0).sum(axis=1)
    return out


def monte_carlo_regret(
    adversary: Union[AdversaryScript, AdversaryDistribution],
    sched: EtaSchedule,
    cfg: GameConfig,
    trials: int,
    seed: int,
) -> Tuple[float, float]:
    """(sample mean, sample std / sqrt(trials)); the error is nan for one trial."""
    if trials < 1:
        raise ValidationError(f"trials must be >= 1, got {trials}")
    dist = as_distribution(adversary)
    if dist.k != cfg.k:
        raise BadExpertCount(f"adversary is for k={dist.k}, config has k={cfg.k}")
    rng = np.random.default_rng(seed)
    support = dist.support
    w = np.array([x for _, x in support])
    pick = rng.choice(len(support), size=trials, p=w / w.sum())
    hz = cfg.horizon
    if hz.is_finite:
        lengths = np.full(trials, hz.steps)
    elif hz.stop_prob >= 1.0:
        lengths = np.zeros(trials, dtype=np.int64)
    else:
        # steps played before stopping: P(N >= t) = (1-delta)^t
        lengths = rng.geometric(hz.stop_prob, size=trials) - 1
    out = np.empty(trials)
    for i in np.unique(pick):
        sel = np.flatnonzero(pick == i)
        script = support[i][0]
        n = int(lengths[sel].max())
        if script.is_finite:
            if hz.is_finite and len(script) != hz.steps:
                raise LengthMismatch(f"script has {len(script)} steps, horizon T={hz.steps}")
            n = min(n, len(script))
        if n > MAX_STEPS:
            raise TooLarge(f"sampled horizon of {n} steps exceeds {MAX_STEPS}")
        regs, cum = _script_table(script, sched, n)
        out[sel] = _realized(regs, cum, lengths[sel], rng, sched.is_random)
    mean = float(np.mean(out))
    err = float(np.std(out, ddof=1) / math.sqrt(trials)) if trials > 1 else math.nan
    return mean, err
