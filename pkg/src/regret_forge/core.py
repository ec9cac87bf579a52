"""Domain types shared by every other module.

All types are frozen dataclasses; invariants are checked at construction so a
value that exists is a valid value. ``validate_config`` adds the checks that
need both a configuration and a schedule (monotonicity over the horizon,
per-step distributions).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    BadDistribution,
    BadExpertCount,
    BadHorizon,
    BadSchedule,
    NonMonotoneSchedule,
    ScheduleDomainError,
)

Support = Tuple[Tuple[float, float], ...]

WEIGHT_TOL = 1e-12


class HorizonKind(str, Enum):
    FINITE = "finite"
    GEOMETRIC = "geometric"


@dataclass(frozen=True)
class Horizon:
    kind: HorizonKind
    steps: Optional[int] = None
    stop_prob: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", HorizonKind(self.kind))
        if self.kind is HorizonKind.FINITE:
            if self.stop_prob is not None:
                raise BadHorizon("finite horizon must not carry a stop probability")
            if self.steps is None or isinstance(self.steps, bool) or int(self.steps) != self.steps:
                raise BadHorizon(f"finite horizon needs an integer step count, got {self.steps!r}")
            if self.steps < 1:
                raise BadHorizon(f"T must be >= 1, got {self.steps}")
            object.__setattr__(self, "steps", int(self.steps))
        else:
            if self.steps is not None:
                raise BadHorizon("geometric horizon must not carry a step count")
            if self.stop_prob is None or not (0.0 < float(self.stop_prob) <= 1.0):
                raise BadHorizon(f"delta must lie in (0, 1], got {self.stop_prob!r}")
            object.__setattr__(self, "stop_prob", float(self.stop_prob))

    @classmethod
    def finite(cls, steps: int) -> "Horizon":
        return cls(HorizonKind.FINITE, steps=steps)

    @classmethod
    def geometric(cls, stop_prob: float) -> "Horizon":
        return cls(HorizonKind.GEOMETRIC, stop_prob=stop_prob)

    @property
    def is_finite(self) -> bool:
        return self.kind is HorizonKind.FINITE

    def normalize(self, regret: float) -> float:
        """R/sqrt(T) for finite horizons, sqrt(delta)*R for geometric ones."""
        if self.is_finite:
            return regret / math.sqrt(self.steps)
        return regret * math.sqrt(self.stop_prob)


@dataclass(frozen=True)
class GameConfig:
    horizon: Horizon
    num_experts: int

    def __post_init__(self):
        k = self.num_experts
        if isinstance(k, bool) or int(k) != k or k < 2:
            raise BadExpertCount(f"need at least 2 experts, got {k!r}")
        object.__setattr__(self, "num_experts", int(k))

    @property
    def k(self) -> int:
        return self.num_experts


class Family(str, Enum):
    SINGLE = "single"
    DECREASING = "decreasing"
    ARBITRARY = "arbitrary"
    RANDOM = "random"


def check_support(support: Sequence[Tuple[float, float]], where: str = "") -> Support:
    """Validate a finite weighted support of learning rates and return it as a tuple."""
    try:
        pairs = tuple((float(eta), float(w)) for eta, w in support)
    except (TypeError, ValueError) as exc:
        raise BadDistribution(f"malformed rate distribution{where}: {support!r}") from exc
    if not pairs:
        raise BadDistribution(f"empty rate distribution{where}")
    for eta, w in pairs:
        if not (math.isfinite(eta) and eta >= 0.0):
            raise BadDistribution(f"rate {eta!r} must be finite and >= 0{where}")
        if not (math.isfinite(w) and w >= 0.0):
            raise BadDistribution(f"weight {w!r} must be finite and >= 0{where}")
    total = math.fsum(w for _, w in pairs)
    if abs(total - 1.0) > WEIGHT_TOL:
        raise BadDistribution(f"weights sum to {total!r}, not 1{where}")
    return pairs


def _check_starts(starts: Sequence[int], n: int) -> Tuple[int, ...]:
    starts = tuple(int(s) for s in starts)
    if len(starts) != n or n == 0:
        raise BadSchedule("piecewise schedule needs one start per piece and at least one piece")
    if starts[0] != 1:
        raise BadSchedule("piecewise schedule must start at t=1")
    if any(b <= a for a, b in zip(starts, starts[1:])):
        raise BadSchedule("piece starts must be strictly increasing")
    return starts


@dataclass(frozen=True)
class PiecewiseRate:
    """Learning rate that is constant on [starts[i], starts[i+1]).

    The last piece extends to infinity. Accepts scalar or array ``t``.
    """

    starts: Tuple[int, ...]
    values: Tuple[float, ...]

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        object.__setattr__(self, "starts", _check_starts(self.starts, len(values)))
        object.__setattr__(self, "values", values)
        if not all(math.isfinite(v) and v >= 0.0 for v in values):
            raise BadSchedule("piecewise rates must be finite and >= 0")

    def __call__(self, t):
        idx = np.searchsorted(np.asarray(self.starts), t, side="right") - 1
        if np.any(idx < 0):
            raise ScheduleDomainError("rate queried before t=1")
        out = np.asarray(self.values)[idx]
        return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class PiecewiseDist:
    """Per-step rate distribution that is constant on [starts[i], starts[i+1])."""

    starts: Tuple[int, ...]
    supports: Tuple[Support, ...]

    def __post_init__(self):
        supports = tuple(check_support(s, f" (piece {i})") for i, s in enumerate(self.supports))
        object.__setattr__(self, "starts", _check_starts(self.starts, len(supports)))
        object.__setattr__(self, "supports", supports)

    def __call__(self, t: int) -> Support:
        i = int(np.searchsorted(np.asarray(self.starts), t, side="right")) - 1
        if i < 0:
            raise ScheduleDomainError("rate distribution queried before t=1")
        return self.supports[i]


@dataclass
class RateProfile:
    """Learning-rate supports for a batch of steps, deduplicated.

    ``index[i]`` points into ``keys`` for the i-th queried step; each key is a
    pair (rates, weights) of 1-d arrays. Deterministic families have one-point keys.
    """

    index: np.ndarray
    keys: list

    def mix(self, fn: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        """Weighted mixture over each key of ``fn(rates[:, None])``.

        ``fn`` receives a column of rates and must broadcast along axis 0;
        the result has one leading entry per key.
        """
        out = []
        for etas, ws in self.keys:
            vals = np.asarray(fn(etas[:, None]), dtype=float)
            out.append(np.tensordot(ws, vals, axes=(0, 0)))
        return np.array(out)


@dataclass(frozen=True)
class EtaSchedule:
    family: Family
    constant_rate: Optional[float] = None
    rate_fn: Optional[Callable] = None
    rate_dist: Optional[Callable] = None

    def __post_init__(self):
        fam = Family(self.family)
        object.__setattr__(self, "family", fam)
        populated = {
            "constant_rate": self.constant_rate is not None,
            "rate_fn": self.rate_fn is not None,
            "rate_dist": self.rate_dist is not None,
        }
        wanted = {
            Family.SINGLE: "constant_rate",
            Family.DECREASING: "rate_fn",
            Family.ARBITRARY: "rate_fn",
            Family.RANDOM: "rate_dist",
        }[fam]
        extra = [name for name, on in populated.items() if on and name != wanted]
        if not populated[wanted] or extra:
            raise BadSchedule(f"{fam.value} schedule takes exactly the field {wanted!r}")
        if fam is Family.SINGLE:
            eta = float(self.constant_rate)
            if not (math.isfinite(eta) and eta >= 0.0):
                raise BadSchedule(f"constant rate must be finite and >= 0, got {eta!r}")
            object.__setattr__(self, "constant_rate", eta)

    @classmethod
    def single(cls, rate: float) -> "EtaSchedule":
        return cls(Family.SINGLE, constant_rate=rate)

    @classmethod
    def decreasing(cls, fn) -> "EtaSchedule":
        return cls(Family.DECREASING, rate_fn=fn)

    @classmethod
    def arbitrary(cls, fn) -> "EtaSchedule":
        return cls(Family.ARBITRARY, rate_fn=fn)

    @classmethod
    def random(cls, dist) -> "EtaSchedule":
        return cls(Family.RANDOM, rate_dist=dist)

    @property
    def is_random(self) -> bool:
        return self.family is Family.RANDOM

    def rate_at(self, t: int) -> float:
        if self.family is Family.SINGLE:
            return self.constant_rate
        if self.is_random:
            raise ScheduleDomainError("random schedules have no single rate; use support_at")
        try:
            eta = float(self.rate_fn(t))
        except ScheduleDomainError:
            raise
        except Exception as exc:
            raise ScheduleDomainError(f"rate undefined at t={t}: {exc}") from exc
        if not (math.isfinite(eta) and eta >= 0.0):
            raise ScheduleDomainError(f"rate at t={t} is {eta!r}; must be finite and >= 0")
        return eta

    def support_at(self, t: int) -> Support:
        if not self.is_random:
            return ((self.rate_at(t), 1.0),)
        try:
            raw = self.rate_dist(t)
        except ScheduleDomainError:
            raise
        except Exception as exc:
            raise ScheduleDomainError(f"rate distribution undefined at t={t}: {exc}") from exc
        return check_support(raw, f" at t={t}")

    def rates(self, ts: np.ndarray) -> np.ndarray:
        """Vectorized ``rate_at`` for the deterministic families."""
        ts = np.asarray(ts, dtype=np.int64)
        if self.family is Family.SINGLE:
            return np.full(ts.shape, self.constant_rate)
        if self.is_random:
            raise ScheduleDomainError("random schedules have no single rate")
        out = None
        try:
            cand = np.asarray(self.rate_fn(ts), dtype=float)
            if cand.shape == ts.shape:
                out = cand
            elif cand.ndim == 0:
                out = np.full(ts.shape, float(cand))
        except ScheduleDomainError:
            raise
        except Exception:
            out = None
        if out is None:
            out = np.fromiter((self.rate_at(int(t)) for t in ts), dtype=float, count=ts.size)
        bad = ~(np.isfinite(out) & (out >= 0.0))
        if np.any(bad):
            t_bad = int(ts[np.argmax(bad)])
            raise ScheduleDomainError(f"rate at t={t_bad} is {out[np.argmax(bad)]!r}")
        if self.family is Family.DECREASING and ts.size > 1:
            order = np.argsort(ts, kind="stable")
            r = out[order]
            up = np.diff(r) > 0.0
            if np.any(up):
                i = int(np.argmax(up))
                raise NonMonotoneSchedule(
                    f"decreasing schedule rises between t={int(ts[order][i])} "
                    f"and t={int(ts[order][i + 1])}"
                )
        return out

    def profile(self, ts: np.ndarray) -> RateProfile:
        ts = np.asarray(ts, dtype=np.int64)
        if self.family is Family.SINGLE:
            key = (np.array([self.constant_rate]), np.array([1.0]))
            return RateProfile(np.zeros(ts.shape, dtype=np.int64), [key])
        if not self.is_random:
            uniq, inv = np.unique(self.rates(ts), return_inverse=True)
            keys = [(np.array([u]), np.array([1.0])) for u in uniq]
            return RateProfile(inv.reshape(ts.shape).astype(np.int64), keys)
        if isinstance(self.rate_dist, PiecewiseDist):
            piece = np.searchsorted(np.asarray(self.rate_dist.starts), ts, side="right") - 1
            if np.any(piece < 0):
                raise ScheduleDomainError("rate distribution queried before t=1")
            used, inv = np.unique(piece, return_inverse=True)
            keys = []
            for j in used:
                sup = self.rate_dist.supports[int(j)]
                keys.append((np.array([e for e, _ in sup]), np.array([w for _, w in sup])))
            return RateProfile(inv.reshape(ts.shape).astype(np.int64), keys)
        seen: dict = {}
        index = np.empty(ts.shape, dtype=np.int64)
        for i, t in enumerate(ts.ravel()):
            sup = self.support_at(int(t))
            index.flat[i] = seen.setdefault(sup, len(seen))
        keys = [None] * len(seen)
        for sup, j in seen.items():
            keys[j] = (np.array([e for e, _ in sup]), np.array([w for _, w in sup]))
        return RateProfile(index, keys)


@dataclass(frozen=True)
class GainLedger:
    cumulative_gains: Tuple[int, ...]
    step: int

    def __post_init__(self):
        gains = tuple(int(g) for g in self.cumulative_gains)
        if any(g != h for g, h in zip(gains, self.cumulative_gains)):
            raise ValueError("cumulative gains must be integers")
        t = int(self.step)
        if t < 1:
            raise ValueError(f"step must be >= 1, got {t}")
        if any(g < 0 or g > t - 1 for g in gains):
            raise ValueError(f"gains {gains} out of range [0, {t - 1}] at step {t}")
        object.__setattr__(self, "cumulative_gains", gains)
        object.__setattr__(self, "step", t)

    @property
    def k(self) -> int:
        return len(self.cumulative_gains)


class Leader(str, Enum):
    TEAM_A = "team_a"
    TEAM_B = "team_b"
    SINGLE = "single"
    TIED = "tied"


@dataclass(frozen=True)
class GapState:
    """Reduced game state for team-structured adversaries.

    Experts are split into team A (``sizes[0]``) and team B (``sizes[1]``);
    the designated single expert belongs to team A. With leader SINGLE the
    other k-1 experts share one gain level ``gap`` below it.
    """

    gap: int
    leader: Leader
    sizes: Tuple[int, int]

    def __post_init__(self):
        object.__setattr__(self, "leader", Leader(self.leader))
        a, b = (int(s) for s in self.sizes)
        if a < 1 or b < 1:
            raise ValueError(f"team sizes must be positive, got {self.sizes}")
        object.__setattr__(self, "sizes", (a, b))
        if self.gap < 0:
            raise ValueError("gap must be nonnegative")
        if (self.leader is Leader.TIED) != (self.gap == 0):
            raise ValueError("leader is TIED exactly when the gap is 0")

    @property
    def k(self) -> int:
        return self.sizes[0] + self.sizes[1]

    @classmethod
    def tied(cls, sizes: Tuple[int, int]) -> "GapState":
        return cls(0, Leader.TIED, sizes)


@dataclass(frozen=True)
class RegretReport:
    regret: float
    loop_part: float
    straight_part: float
    normalized: float
    truncation_bound: float = 0.0

    def __post_init__(self):
        if not self.truncation_bound >= 0.0:
            raise ValueError("truncation bound must be nonnegative")
        total = self.loop_part + self.straight_part
        if abs(self.regret - total) > 1e-9 * max(1.0, abs(self.regret)):
            raise ValueError(
                f"regret {self.regret!r} != loop {self.loop_part!r} + straight {self.straight_part!r}"
            )

    @classmethod
    def from_parts(
        cls, loop_part: float, straight_part: float, horizon: Horizon, truncation_bound: float = 0.0
    ) -> "RegretReport":
        regret = loop_part + straight_part
        return cls(
            regret=float(regret),
            loop_part=float(loop_part),
            straight_part=float(straight_part),
            normalized=float(horizon.normalize(regret)),
            truncation_bound=float(truncation_bound),
        )


def validate_config(cfg: GameConfig, sched: EtaSchedule, check_steps: int = 10_000) -> None:
    """Raise the first violated invariant of (cfg, sched); return None when valid.

    Schedules are queried on t = 1..T for finite horizons and on
    t = 1..check_steps for geometric ones.
    """
    # re-run the constructors' checks; objects may have been built with object.__new__
    Horizon(cfg.horizon.kind, cfg.horizon.steps, cfg.horizon.stop_prob)
    GameConfig(cfg.horizon, cfg.num_experts)
    EtaSchedule(sched.family, sched.constant_rate, sched.rate_fn, sched.rate_dist)
    n = cfg.horizon.steps if cfg.horizon.is_finite else check_steps
    ts = np.arange(1, n + 1)
    if sched.is_random:
        sched.profile(ts)
    elif sched.family is not Family.SINGLE:
        sched.rates(ts)
