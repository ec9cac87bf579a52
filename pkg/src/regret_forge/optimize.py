"""Rate parametrizations, asymptotic estimates and the scalar searches behind them."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, Tuple

import numpy as np

from .core import Horizon
from .errors import BadBracket, BadProbability, DomainError, InsufficientSamples, NoRoot

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
DEFAULT_BRACKET = (0.1, 20.0)


@dataclass(frozen=True)
class AlphaParam:
    alpha: float
    horizon: Horizon

    def __post_init__(self):
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise DomainError(f"alpha must be positive and finite, got {self.alpha!r}")

    @property
    def rate(self) -> float:
        return alpha_to_eta(self.alpha, self.horizon)


@dataclass(frozen=True)
class GeometricSolution:
    alpha_star: float
    gamma_star: float
    h_star: float
    beta_star: float
    residuals: Tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not (0.5 < self.gamma_star <= 1.0):
            raise ValueError(f"gamma_star {self.gamma_star!r} outside (1/2, 1]")
        if abs(self.h_star - h_function(self.alpha_star, self.gamma_star)) > 1e-9:
            raise ValueError("h_star inconsistent with (alpha_star, gamma_star)")

    def straight_len(self, delta: float) -> int:
        """l = round(beta*/sqrt(delta))."""
        return int(round(self.beta_star / math.sqrt(delta)))


def alpha_to_eta(alpha: float, horizon: Horizon) -> float:
    """ln(1 + alpha/sqrt(T)) or ln(1 + alpha sqrt(delta))."""
    if not alpha >= 0:
        raise DomainError(f"alpha must be >= 0, got {alpha!r}")
    if horizon.is_finite:
        return math.log1p(alpha / math.sqrt(horizon.steps))
    return math.log1p(alpha * math.sqrt(horizon.stop_prob))


def eta_to_alpha(eta: float, horizon: Horizon) -> float:
    scale = math.sqrt(horizon.steps) if horizon.is_finite else 1.0 / math.sqrt(horizon.stop_prob)
    return math.expm1(eta) * scale


def finite_loop_estimate(alpha: float, T: int, k: int = 2, ell: float = 0.0) -> float:
    """alpha sqrt(T)/8, times (1 - 1/k^2) for odd k.

    A nonzero ``ell`` counts only the (T - l)/2 cycles actually played,
    i.e. alpha (T - l)/(8 sqrt(T)).
    """
    base = alpha * (T - ell) / (8.0 * math.sqrt(T))
    return base if k % 2 == 0 else base * (1.0 - 1.0 / k**2)


def finite_straight_estimate(alpha: float, T: int, k: int, ell: float) -> float:
    """(sqrt(T)/alpha) ln(k e^{l eta'}/(e^{l eta'} + k - 1)) with eta' = alpha/sqrt(T)."""
    if alpha <= 0:
        raise DomainError(f"alpha must be > 0, got {alpha!r}")
    x = ell * alpha / math.sqrt(T)
    # ln(k) + x - ln(e^x + k - 1), written for large x
    val = math.log(k) - math.log1p((k - 1) * math.exp(-x)) if x > 0 else 0.0
    return math.sqrt(T) / alpha * val


def optimal_alpha_finite(k: int) -> float:
    """sqrt(8 ln k); odd k divides ln k by 1 - 1/k^2."""
    if k < 2:
        raise DomainError(f"k must be >= 2, got {k}")
    if k % 2 == 0:
        return math.sqrt(8.0 * math.log(k))
    return math.sqrt(8.0 * math.log(k) / (1.0 - 1.0 / k**2))


def lsrand_factor() -> float:
    return 2.0 / 3.0


def lsrandpp_factor(p: float) -> float:
    """(2/(3 sqrt p)) (1 - (1-p)^{3/2})."""
    if not (0.0 < p <= 1.0):
        raise BadProbability(f"p must lie in (0, 1], got {p!r}")
    if p == 1.0:
        return 2.0 / 3.0
    return 2.0 / (3.0 * math.sqrt(p)) * (1.0 - (1.0 - p) ** 1.5)


def golden_section_min(
    f: Callable[[float], float], lo: float, hi: float, rtol: float = 1e-4, max_iter: int = 500
) -> Tuple[float, float]:
    """Minimize a unimodal f on [lo, hi]; stops when the bracket is rtol-relative small.

    Equal probe values shrink to the inner interval, so a flat objective
    converges to the midpoint.
    """
    if not (lo < hi):
        raise BadBracket(f"bracket [{lo!r}, {hi!r}] is empty")
    a, b = float(lo), float(hi)
    x1, x2 = b - INV_PHI * (b - a), a + INV_PHI * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if b - a <= rtol * max(abs(a), abs(b), 1e-300):
            break
        if f1 < f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - INV_PHI * (b - a)
            f1 = f(x1)
        elif f2 < f1:
            a, x1, f1 = x1, x2, f2
            x2 = a + INV_PHI * (b - a)
            f2 = f(x2)
        else:
            a, b = x1, x2
            x1, x2 = b - INV_PHI * (b - a), a + INV_PHI * (b - a)
            f1, f2 = f(x1), f(x2)
    x = (a + b) / 2.0
    return x, f(x)


def golden_section_max(f, lo, hi, rtol: float = 1e-4) -> Tuple[float, float]:
    x, v = golden_section_min(lambda z: -f(z), lo, hi, rtol)
    return x, -v


def bisect_root(g: Callable[[float], float], lo: float, hi: float, xtol: float = 1e-15, max_iter: int = 200) -> float:
    glo, ghi = g(lo), g(hi)
    if glo == 0.0:
        return lo
    if ghi == 0.0:
        return hi
    if np.sign(glo) == np.sign(ghi):
        raise NoRoot(f"no sign change on [{lo!r}, {hi!r}]: g = {glo!r}, {ghi!r}")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if gm == 0.0 or hi - lo <= xtol:
            return mid
        if np.sign(gm) == np.sign(glo):
            lo, glo = mid, gm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def optimize_mix_p(rtol: float = 1e-10) -> Tuple[float, float]:
    """(p*, factor*) maximizing lsrandpp_factor over (0, 1]."""
    return golden_section_max(lsrandpp_factor, 1e-9, 1.0, rtol)


def h_function(alpha: float, gamma: float) -> float:
    """ln(2 gamma)/alpha + (alpha/2) gamma (1 - gamma)."""
    if not (0.5 <= gamma <= 1.0):
        raise DomainError(f"gamma must lie in [1/2, 1], got {gamma!r}")
    if alpha <= 0:
        raise DomainError(f"alpha must be > 0, got {alpha!r}")
    return math.log(2.0 * gamma) / alpha + 0.5 * alpha * gamma * (1.0 - gamma)


def gamma_star(alpha: float) -> float:
    """Positive stationary point of h in gamma, clamped to 1."""
    if alpha <= 0:
        raise DomainError(f"alpha must be > 0, got {alpha!r}")
    g = (0.5 + math.sqrt(0.25 + 4.0 / alpha**2)) / 2.0
    return min(g, 1.0)


def _system_gap(gamma: float) -> float:
    # difference of the two alpha^2 equations, cleared of denominators
    return 2.0 * math.log(2.0 * gamma) * gamma * (gamma - 0.5) - gamma * (1.0 - gamma)


def solve_geometric_system(eps: float = 1e-9) -> GeometricSolution:
    """Saddle of h: alpha^2 = 2 ln(2g)/(g(1-g)) = 1/(g(g - 1/2))."""
    g = bisect_root(_system_gap, 0.5 + eps, 1.0 - eps)
    alpha = 1.0 / math.sqrt(g * (g - 0.5))
    res1 = alpha**2 - 2.0 * math.log(2.0 * g) / (g * (1.0 - g))
    res2 = alpha**2 - 1.0 / (g * (g - 0.5))
    h = h_function(alpha, g)
    boundary = h_function(math.sqrt(2.0), 1.0)
    if not h < boundary:
        raise NoRoot(f"interior solution h={h!r} does not beat the boundary value {boundary!r}")
    beta = math.log(g / (1.0 - g)) / alpha
    return GeometricSolution(alpha, g, h, beta, (res1, res2))


def optimize_eta(
    objective: Callable[[float], float],
    bracket: Tuple[float, float] = DEFAULT_BRACKET,
    rtol: float = 1e-4,
) -> Tuple[float, float]:
    """(alpha_opt, regret_opt) minimizing a regret-in-alpha map by golden section."""
    lo, hi = bracket
    if not (0 < lo < hi) or not math.isfinite(hi):
        raise BadBracket(f"bracket must satisfy 0 < lo < hi, got {bracket!r}")
    return golden_section_min(objective, lo, hi, rtol)


def asymptotic_extrapolate(samples: Sequence[Tuple[float, float]], power: float = -0.25) -> Tuple[float, float]:
    """Least-squares fit y = c0 + c1 T^power; returns (c0, max |residual|)."""
    if len(samples) < 3:
        raise InsufficientSamples(f"need at least 3 samples, got {len(samples)}")
    T = np.array([s[0] for s in samples], dtype=float)
    y = np.array([s[1] for s in samples], dtype=float)
    X = np.column_stack([np.ones_like(T), T**power])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = float(np.max(np.abs(X @ coef - y)))
    return float(coef[0]), resid
