"""Exact regret of multiplicative weights against worst-case adversaries."""

from .adversaries import (
    AdversaryDistribution,
    AdversaryScript,
    StepAction,
    build_geometric_loop,
    build_geometric_sl,
    build_geometric_straight,
    build_lsdet,
    build_lsrand,
    build_lsrandpp,
    build_odd_split,
    loop_primitive,
    parse_adversary,
    straight_primitive,
)
from .core import (
    EtaSchedule,
    Family,
    GainLedger,
    GameConfig,
    GapState,
    Horizon,
    Leader,
    PiecewiseDist,
    PiecewiseRate,
    RegretReport,
    validate_config,
)
from .policies import ProbabilityVector, mwa_weights, policy_probabilities, team_correct_prob, two_expert_lag_prob

__version__ = "0.1.0"

__all__ = [
    "AdversaryDistribution",
    "AdversaryScript",
    "EtaSchedule",
    "Family",
    "GainLedger",
    "GameConfig",
    "GapState",
    "Horizon",
    "Leader",
    "PiecewiseDist",
    "PiecewiseRate",
    "ProbabilityVector",
    "RegretReport",
    "StepAction",
    "build_geometric_loop",
    "build_geometric_sl",
    "build_geometric_straight",
    "build_lsdet",
    "build_lsrand",
    "build_lsrandpp",
    "build_odd_split",
    "loop_primitive",
    "mwa_weights",
    "parse_adversary",
    "policy_probabilities",
    "straight_primitive",
    "team_correct_prob",
    "two_expert_lag_prob",
    "validate_config",
]
