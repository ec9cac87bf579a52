"""Exact, closed-form, Monte Carlo and best-response regret evaluation."""

from __future__ import annotations

import math
from typing import Union

from ..adversaries import AdversaryDistribution, AdversaryScript, as_distribution
from ..core import EtaSchedule, Family, GameConfig, RegretReport
from ..errors import BadExpertCount
from .csvio import ReportRow, read_rows, write_rows
from .formulas import (
    loop_cycle_regret,
    lsdet_regret_formula,
    lsdet_regret_terms,
    lsrand_regret_formula,
    lsrandpp_regret_formula,
    odd_lsdet_regret_formula,
    straight_step_regret,
)
from .geometric import (
    geometric_loop_regret,
    geometric_sl_curve,
    geometric_sl_regret,
    geometric_straight_regret,
)
from .montecarlo import monte_carlo_regret
from .oracles import (
    BestResponseResult,
    DPOraclePolicy,
    Structure,
    best_response_dp_finite,
    best_response_vi_geometric,
    mwa_lag_prob,
)
from .simulate import exact_regret_script, ledger_step_regrets, step_regrets


def exact_regret_distribution(
    dist: Union[AdversaryDistribution, AdversaryScript],
    sched: EtaSchedule,
    cfg: GameConfig,
    tail_tol: float = 1e-12,
    use_formulas: bool = True,
) -> RegretReport:
    """Probability-weighted average of the exact regret of each script.

    The randomized finite-horizon constructions are evaluated in closed form
    unless ``use_formulas`` is False.
    """
    dist = as_distribution(dist)
    if dist.k != cfg.k:
        raise BadExpertCount(f"adversary is for k={dist.k}, config has k={cfg.k}")
    hz = cfg.horizon
    if use_formulas and hz.is_finite and dist.kind != "explicit" and dist.steps == hz.steps:
        if dist.kind == "lsrand":
            return lsrand_regret_formula(hz.steps, dist.straight_len, sched, cfg.k, dist.split)
        return lsrandpp_regret_formula(hz.steps, dist.straight_len, dist.mix_prob, sched, cfg.k, dist.split)
    loops, straights, bounds = [], [], []
    for script, w in dist.support:
        if w == 0.0:
            continue
        rep = exact_regret_script(script, sched, cfg, tail_tol)
        loops.append(w * rep.loop_part)
        straights.append(w * rep.straight_part)
        bounds.append(w * rep.truncation_bound)
    return RegretReport.from_parts(math.fsum(loops), math.fsum(straights), hz, math.fsum(bounds))


def evaluate_adversary(
    adversary: Union[AdversaryDistribution, AdversaryScript],
    sched: EtaSchedule,
    cfg: GameConfig,
    tail_tol: float = 1e-12,
) -> RegretReport:
    """Exact regret, through a closed form whenever the adversary has one."""
    hz = cfg.horizon
    if isinstance(adversary, AdversaryDistribution):
        return exact_regret_distribution(adversary, sched, cfg, tail_tol)
    if adversary.k != cfg.k:
        raise BadExpertCount(f"adversary is for k={adversary.k}, config has k={cfg.k}")
    segs = adversary.segments
    toks = tuple(t for t, _ in segs)
    if hz.is_finite and adversary.is_finite and len(adversary) == hz.steps:
        if toks in ((), ("L",), ("S",), ("L", "S")):
            ell = adversary.straight_len
            return RegretReport.from_parts(
                *lsdet_regret_terms(hz.steps, ell, sched, cfg.k, adversary.split), hz
            )
    if not hz.is_finite and sched.family is Family.SINGLE:
        eta, delta = sched.constant_rate, hz.stop_prob
        if adversary.cycle == "loop" and not segs:
            return geometric_loop_regret(delta, eta, cfg.k, adversary.split)
        if adversary.cycle == "straight" and not segs:
            return geometric_straight_regret(delta, eta, cfg.k, tail_tol)
        if adversary.cycle == "loop" and toks == ("S",) and cfg.k == 2:
            return geometric_sl_regret(delta, eta, adversary.straight_len)
    return exact_regret_script(adversary, sched, cfg, tail_tol)


__all__ = [
    "BestResponseResult",
    "DPOraclePolicy",
    "ReportRow",
    "Structure",
    "best_response_dp_finite",
    "best_response_vi_geometric",
    "exact_regret_distribution",
    "exact_regret_script",
    "evaluate_adversary",
    "geometric_loop_regret",
    "geometric_sl_curve",
    "geometric_sl_regret",
    "geometric_straight_regret",
    "ledger_step_regrets",
    "loop_cycle_regret",
    "lsdet_regret_formula",
    "lsdet_regret_terms",
    "lsrand_regret_formula",
    "lsrandpp_regret_formula",
    "monte_carlo_regret",
    "mwa_lag_prob",
    "odd_lsdet_regret_formula",
    "read_rows",
    "step_regrets",
    "straight_step_regret",
    "write_rows",
]
