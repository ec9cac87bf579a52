"""Best-response adversaries against two-expert policies.

The policy is summarized by the mass p(d, t) it puts on the lagging expert
at gap d. Each step the adversary moves the gap up (regret +p), leaves it
(regret 0) or moves it down (regret -p, only when d > 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import solve_banded
from scipy.special import expit

from ..core import EtaSchedule
from ..errors import BadDelta, DomainError, NoConvergence, NonPositiveTolerance, TooLarge

MAX_FINITE_T = 5000
MAX_D = 100_000
UP, STAY, DOWN = 1, 0, -1


class Structure(str, Enum):
    LOOP_THEN_STRAIGHT = "LoopThenStraight"
    STRAIGHT_THEN_LOOP = "StraightThenLoop"
    OTHER = "Other"


@dataclass(frozen=True)
class DPOraclePolicy:
    """Lag probability p(d, t), vectorized over an array of gaps ``d``."""

    lag_prob: Callable[[np.ndarray, int], np.ndarray]

    @classmethod
    def mwa(cls, rate: Union[float, EtaSchedule]) -> "DPOraclePolicy":
        sched = rate if isinstance(rate, EtaSchedule) else EtaSchedule.single(float(rate))

        def p(d, t):
            d = np.asarray(d, dtype=float)
            return sum(w * expit(-eta * d) for eta, w in sched.support_at(t))

        return cls(p)

    def __call__(self, d, t: int) -> np.ndarray:
        return np.asarray(self.lag_prob(d, t), dtype=float)


@dataclass(frozen=True)
class BestResponseResult:
    regret: float
    structure: Structure
    optimal_path: Optional[Tuple[int, ...]] = None
    action_map: Optional[Tuple[int, ...]] = None
    threshold: Optional[int] = None
    stay_steps: int = 0

    def __post_init__(self):
        path = self.optimal_path
        if path is not None:
            if not path or path[0] != 0:
                raise ValueError("optimal path must start at d=0")
            if any(abs(b - a) > 1 or b < 0 for a, b in zip(path, path[1:])):
                raise ValueError("optimal path moves by at most one and stays nonnegative")


def classify_finite_path(path: Sequence[int]) -> Tuple[Structure, Optional[int], int]:
    """(structure, straight length, stays at gap 0).

    LoopThenStraight: gap stays in {0, 1} (at most one 0 -> 0 step) up to its
    last visit to 0, then rises by one every step.
    """
    path = list(path)
    steps = np.diff(path)
    zeros = [i for i, d in enumerate(path) if d == 0]
    last0 = zeros[-1]
    head, tail = path[: last0 + 1], steps[last0:]
    stays = sum(1 for a, b in zip(head, head[1:]) if a == b == 0)
    if max(head) <= 1 and stays <= 1 and np.all(tail == 1):
        bad_head = any(a == b and a != 0 for a, b in zip(head, head[1:]))
        if not bad_head:
            return Structure.LOOP_THEN_STRAIGHT, len(tail), stays
    # strictly rising to some l, then alternating l, l+1
    i = 0
    while i < len(steps) and steps[i] == 1:
        i += 1
    rest = steps[i:]
    if rest.size and np.all(rest[0::2] == -1) and np.all(rest[1::2] == 1):
        return Structure.STRAIGHT_THEN_LOOP, i - 1, 0
    return Structure.OTHER, None, stays


def best_response_dp_finite(policy: DPOraclePolicy, T: int) -> BestResponseResult:
    """Exact maximum of expected regret over all gap paths of length T.

    Ties prefer moving up, then staying. The value table is rolled over t;
    the choices are kept in a T x (T+1) int8 array for path recovery.
    """
    if T < 1:
        raise DomainError(f"T must be >= 1, got {T}")
    if T > MAX_FINITE_T:
        raise TooLarge(f"T={T} exceeds the oracle limit {MAX_FINITE_T}")
    choice = np.zeros((T, T + 1), dtype=np.int8)
    nxt = np.zeros(T + 2)  # V_{T+1}(d) for d = 0..T+1
    for t in range(T, 0, -1):
        d = np.arange(t)  # gaps reachable before step t
        p = policy(d, t)
        if abs(float(p[0]) - 0.5) > 1e-12:
            raise DomainError(f"lag probability at a tie must be 1/2, got {float(p[0])!r} at t={t}")
        up = p + nxt[1:t + 1]
        stay = nxt[:t]
        down = np.full(t, -np.inf)
        down[1:] = -p[1:] + nxt[: t - 1]
        best = up.copy()
        act = np.full(t, UP, dtype=np.int8)
        m = stay > best
        best[m], act[m] = stay[m], STAY
        m = down > best
        best[m], act[m] = down[m], DOWN
        choice[t - 1, :t] = act
        nxt = np.concatenate([best, np.zeros(T + 2 - t)])
    path = [0]
    for t in range(1, T + 1):
        path.append(path[-1] + int(choice[t - 1, path[-1]]))
    structure, ell, stays = classify_finite_path(path)
    return BestResponseResult(float(nxt[0]), structure, optimal_path=tuple(path), threshold=ell, stay_steps=stays)


def _policy_values(p: np.ndarray, q: float, act: np.ndarray) -> np.ndarray:
    """Solve V = r + q P V for a stationary action map on d = 0..n-1, V(n) = 0."""
    n = p.size
    r = np.where(act == UP, p, np.where(act == DOWN, -p, 0.0))
    ab = np.zeros((3, n))  # banded: superdiag, diag, subdiag
    ab[1] = 1.0
    up = act == UP
    down = act == DOWN
    stay = act == STAY
    ab[1, stay] -= q
    ab[0, 1:] = np.where(up[:-1], -q, 0.0)
    ab[2, :-1] = np.where(down[1:], -q, 0.0)
    return solve_banded((1, 1), ab, r)


def _q_values(p: np.ndarray, q: float, V: np.ndarray) -> np.ndarray:
    """Action values, rows ordered (up, stay, down) so row = 1 - action code."""
    down = np.full(p.size, -np.inf)
    down[1:] = -p[1:] + q * V[:-1]
    return np.stack([p + q * np.append(V[1:], 0.0), q * V, down])


def _greedy(Q: np.ndarray):
    """Best value and action per gap; ties prefer up, then stay."""
    row = np.argmax(Q, axis=0)
    return Q[row, np.arange(Q.shape[1])], (1 - row).astype(np.int8)


def _classify_action_map(act: np.ndarray) -> Tuple[Structure, Optional[int]]:
    """Follow the action map from d=0: rise to l, then cycle l <-> l+1."""
    d, seen = 0, []
    while d not in seen and d < act.size:
        seen.append(d)
        d += int(act[d])
    if d >= act.size:
        return Structure.OTHER, None
    cycle = seen[seen.index(d):]
    rising = all(b - a == 1 for a, b in zip(seen, seen[1:]))
    if rising and len(cycle) == 2:
        return Structure.STRAIGHT_THEN_LOOP, cycle[0]
    return Structure.OTHER, None


def auto_d_max(lag_prob: Callable[[np.ndarray], np.ndarray], tol: float) -> int:
    d = 16
    while float(np.asarray(lag_prob(np.array([d])))[0]) >= tol:
        d *= 2
        if d > MAX_D:
            raise TooLarge(f"p(d) stays above {tol!r} beyond d={MAX_D}")
    return d


def best_response_vi_geometric(
    lag_prob: Callable[[np.ndarray], np.ndarray],
    delta: float,
    d_max: Optional[int] = None,
    tol: float = 1e-12,
    max_iter: int = 100_000,
) -> BestResponseResult:
    """Optimal stationary adversary when step t counts with weight (1-delta)^t.

    V(d) = max(p(d) + qV(d+1), qV(d), -p(d) + qV(d-1)) with q = 1-delta and
    V(d_max+1) = 0; the regret is qV(0). Policy iteration (exact banded
    solves) finds the fixed point, value-iteration sweeps confirm it to ``tol``.
    """
    if not (0.0 < delta <= 1.0):
        raise BadDelta(f"delta must lie in (0, 1], got {delta!r}")
    if not tol > 0:
        raise NonPositiveTolerance(f"tolerance must be > 0, got {tol!r}")
    if d_max is None:
        d_max = auto_d_max(lag_prob, tol)
    if d_max > MAX_D:
        raise TooLarge(f"d_max={d_max} exceeds {MAX_D}")
    q = 1.0 - delta
    p = np.asarray(lag_prob(np.arange(d_max + 1)), dtype=float)
    act = np.full(p.size, UP, dtype=np.int8)
    V = _policy_values(p, q, act)
    cols = np.arange(p.size)
    for _ in range(max_iter):
        Q = _q_values(p, q, V)
        best, new = _greedy(Q)
        cur = Q[1 - act.astype(np.int64), cols]
        # switch only where another action is strictly better
        changed = best > cur + 1e-15 * np.maximum(1.0, np.abs(cur))
        if not np.any(changed):
            break
        act = np.where(changed, new, act)
        V = _policy_values(p, q, act)
    else:
        raise NoConvergence(f"policy iteration did not settle in {max_iter} rounds")
    resid = math.inf
    for _ in range(max_iter):
        best, act = _greedy(_q_values(p, q, V))
        resid = float(np.max(np.abs(best - V)))
        V = best
        if resid <= tol * (1.0 - q) or resid == 0.0:
            break
    else:
        raise NoConvergence(f"value iteration residual {resid!r} above {tol!r}")
    structure, ell = _classify_action_map(act)
    return BestResponseResult(float(q * V[0]), structure, action_map=tuple(int(a) for a in act), threshold=ell)


def mwa_lag_prob(eta: float) -> Callable[[np.ndarray], np.ndarray]:
    return lambda d: expit(-eta * np.asarray(d, dtype=float))


def enumerate_paths_regret(policy: DPOraclePolicy, T: int) -> float:
    """Brute-force maximum over all 3-way move sequences; for tiny T only."""
    best = -math.inf

    def go(t, d, acc):
        nonlocal best
        if t > T:
            best = max(best, acc)
            return
        p = float(policy(np.array([d]), t)[0])
        go(t + 1, d + 1, acc + p)
        go(t + 1, d, acc)
        if d > 0:
            go(t + 1, d - 1, acc - p)

    go(1, 0, 0.0)
    return best
