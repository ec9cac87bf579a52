"""Oblivious adversaries over team-structured experts.

Experts are split into team A (indices ``0..a-1``) and team B (``a..k-1``);
expert 0 is the designated single expert. A script is a run-length encoded
sequence of four actions plus an optional infinite 2-periodic or constant
tail, which is how the geometric-horizon adversaries are described.

Text form, whitespace separated and read left to right::

    L*n   n loop cycles (advance A, then advance B)
    S*n   n straight steps (advance the single expert)
    I*n   n idle steps
    A*n / B*n   advance one team n times
    loop / straight   trailing infinite cycle (geometric horizon only)
    split:a,b   team sizes, written only when not the default split

Named forms: ``lsdet[:l]``, ``lsrand[:l]``, ``lsrand++:p[:l]``, ``sl:l`` / ``sl:inf``.
Distributions are written as ``"w: script; w: script"``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .errors import (
    BadLength,
    BadProbability,
    EvenK,
    OddWithoutSplit,
    ParseError,
    TooShort,
    ValidationError,
)

WEIGHT_TOL = 1e-12


class StepAction(str, Enum):
    ADVANCE_TEAM_A = "A"
    ADVANCE_TEAM_B = "B"
    ADVANCE_LEADER_SINGLE = "S"
    IDLE = "I"

    @property
    def code(self) -> int:
        return ACTION_CODES[self.value]


# integer codes used in action arrays
A, B, S, I = 0, 1, 2, 3
ACTION_CODES = {"A": A, "B": B, "S": S, "I": I}
_TOKENS = ("L", "S", "I", "A", "B")
_CYCLES = {"loop": (A, B), "straight": (S,)}


def canonical_split(k: int) -> Tuple[int, int]:
    """Equal teams for even k, (m, m+1) for k = 2m+1."""
    if k < 2:
        raise ValidationError(f"need k >= 2, got {k}")
    return (k // 2, k - k // 2)


def _check_split(split, k: Optional[int] = None) -> Tuple[int, int]:
    try:
        a, b = (int(s) for s in split)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"bad team split {split!r}") from exc
    if a < 1 or b < 1 or (k is not None and a + b != k):
        raise ValidationError(f"team split {split!r} incompatible with k={k}")
    return (a, b)


def _normalize_segments(segments) -> Tuple[Tuple[str, int], ...]:
    out = []
    for tok, n in segments:
        if tok not in _TOKENS:
            raise ValidationError(f"unknown script token {tok!r}")
        n = int(n)
        if n < 0:
            raise ValidationError(f"negative count for {tok!r}")
        if n == 0:
            continue
        if out and out[-1][0] == tok:
            out[-1] = (tok, out[-1][1] + n)
        else:
            out.append((tok, n))
    return tuple(out)


@dataclass(frozen=True)
class AdversaryScript:
    """Deterministic action sequence; ``cycle`` marks an infinite periodic tail."""

    segments: Tuple[Tuple[str, int], ...]
    split: Tuple[int, int]
    cycle: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "segments", _normalize_segments(self.segments))
        object.__setattr__(self, "split", _check_split(self.split))
        if self.cycle is not None and self.cycle not in _CYCLES:
            raise ValidationError(f"unknown cycle {self.cycle!r}")

    @property
    def k(self) -> int:
        return self.split[0] + self.split[1]

    @property
    def is_finite(self) -> bool:
        return self.cycle is None

    @property
    def prefix_len(self) -> int:
        return sum(2 * n if tok == "L" else n for tok, n in self.segments)

    def __len__(self) -> int:
        if not self.is_finite:
            raise TypeError("infinite script has no length")
        return self.prefix_len

    def _count(self, tok: str) -> int:
        return sum(n for t, n in self.segments if t == tok)

    @property
    def loop_count(self) -> int:
        """Completed loop cycles in the finite prefix."""
        return self._count("L") + min(self._count("A"), self._count("B"))

    @property
    def straight_len(self) -> int:
        return self._count("S")

    @property
    def idle_count(self) -> int:
        return self._count("I")

    def actions(self, n: Optional[int] = None) -> np.ndarray:
        """First ``n`` action codes (all of them for a finite script)."""
        parts = []
        for tok, cnt in self.segments:
            if tok == "L":
                parts.append(np.tile(np.array([A, B], dtype=np.int8), cnt))
            else:
                parts.append(np.full(cnt, ACTION_CODES[tok], dtype=np.int8))
        prefix = np.concatenate(parts) if parts else np.zeros(0, dtype=np.int8)
        if n is None:
            if not self.is_finite:
                raise ValueError("infinite script needs an explicit length")
            return prefix
        if n <= prefix.size:
            return prefix[:n]
        if self.is_finite:
            raise BadLength(f"script has {prefix.size} actions, {n} requested")
        period = np.array(_CYCLES[self.cycle], dtype=np.int8)
        reps = -(-(n - prefix.size) // period.size)
        return np.concatenate([prefix, np.tile(period, reps)])[:n]

    def levels(self, n: Optional[int] = None) -> np.ndarray:
        """Gain levels before each step and after the last, shape (3, n+1).

        Rows: single expert, rest of team A, team B.
        """
        acts = self.actions(n)
        inc = np.zeros((3, acts.size + 1), dtype=np.int64)
        inc[0, 1:] = (acts == A) | (acts == S)
        inc[1, 1:] = acts == A
        inc[2, 1:] = acts == B
        return np.cumsum(inc, axis=1)

    def gap_path(self, n: Optional[int] = None) -> np.ndarray:
        """Distance between the highest and lowest gain level, d_0..d_n."""
        lv = self.levels(n)
        if self.split[0] == 1:
            lv = lv[[0, 2]]
        return lv.max(axis=0) - lv.min(axis=0)

    def to_text(self) -> str:
        toks = [tok if n == 1 else f"{tok}*{n}" for tok, n in self.segments]
        if not toks and not self.cycle:
            toks = ["L*0"]
        if self.cycle:
            toks.append(self.cycle)
        if self.split != canonical_split(self.k):
            toks.append(f"split:{self.split[0]},{self.split[1]}")
        return " ".join(toks)

    def __str__(self) -> str:
        return self.to_text()


def _script(segments, k: int, split=None, cycle=None) -> AdversaryScript:
    split = canonical_split(k) if split is None else _check_split(split, k)
    return AdversaryScript(tuple(segments), split, cycle)


def loop_primitive(k: int, cycles: int, split=None) -> AdversaryScript:
    if cycles < 0:
        raise BadLength("cycle count must be >= 0")
    if split is None and k % 2:
        raise OddWithoutSplit(f"k={k} is odd; pass split=build_odd_split(k)")
    return _script([("L", cycles)], k, split)


def straight_primitive(k: int, steps: int) -> AdversaryScript:
    if steps < 0:
        raise BadLength("straight length must be >= 0")
    return _script([("S", steps)], k)


def build_odd_split(k: int) -> Tuple[int, int]:
    if k % 2 == 0:
        raise EvenK(f"k={k} is even")
    if k < 3:
        raise ValidationError(f"need odd k >= 3, got {k}")
    return canonical_split(k)


def default_straight_len(T: int, even_remainder: bool = True) -> int:
    """round(T^{3/4}); optionally moved by one so that T - l is even."""
    x = T ** 0.75
    ell = min(int(round(x)), T)
    if even_remainder and (T - ell) % 2:
        cands = [c for c in (ell - 1, ell + 1) if 0 <= c <= T]
        ell = min(cands, key=lambda c: abs(c - x))
    return ell


def build_lsdet(T: int, k: int, ell: Optional[int] = None) -> AdversaryScript:
    """(T-l)/2 loop cycles then l straight steps.

    An explicit ``ell`` with odd T - l gets one leading idle step.
    """
    if T < 1:
        raise BadLength(f"T must be >= 1, got {T}")
    if ell is None:
        ell = default_straight_len(T)
    if ell < 0 or ell > T:
        raise BadLength(f"straight length {ell} outside [0, {T}]")
    idle = (T - ell) % 2
    return _script([("I", idle), ("L", (T - ell) // 2), ("S", ell)], k)


def build_geometric_sl(ell: Union[int, float], k: int = 2) -> AdversaryScript:
    """l straight steps then loop forever at gap l <-> l+1; ``inf`` is pure straight."""
    if ell == math.inf:
        return _script([], k, cycle="straight")
    if ell < 0 or int(ell) != ell:
        raise BadLength(f"straight length must be a nonnegative integer, got {ell!r}")
    return _script([("S", int(ell))], k, cycle="loop")


def build_geometric_loop(k: int, split=None) -> AdversaryScript:
    return _script([], k, split, cycle="loop")


def build_geometric_straight(k: int) -> AdversaryScript:
    return _script([], k, cycle="straight")


@dataclass(frozen=True)
class AdversaryDistribution:
    """Finite mixture of scripts.

    ``kind`` is ``"lsrand"``, ``"lsrand++"`` (parameterized, support built on
    demand) or ``"explicit"`` (support given directly).
    """

    kind: str
    split: Tuple[int, int]
    steps: Optional[int] = None
    straight_len: Optional[int] = None
    mix_prob: Optional[float] = None
    explicit_support: Optional[Tuple[Tuple[AdversaryScript, float], ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "split", _check_split(self.split))
        if self.kind == "explicit":
            sup = tuple((s, float(w)) for s, w in self.explicit_support or ())
            if not sup:
                raise ValidationError("empty adversary distribution")
            if any(w < 0 or not math.isfinite(w) for _, w in sup):
                raise ValidationError("distribution weights must be finite and >= 0")
            if abs(math.fsum(w for _, w in sup) - 1.0) > WEIGHT_TOL:
                raise ValidationError("distribution weights must sum to 1")
            if any(s.split != self.split for s, _ in sup):
                raise ValidationError("all scripts must share the distribution's split")
            object.__setattr__(self, "explicit_support", sup)
        elif self.kind in ("lsrand", "lsrand++"):
            T, ell = self.steps, self.straight_len
            if T is None or ell is None or ell < 0 or ell > T:
                raise BadLength(f"bad (T, l) = ({T}, {ell})")
            if self.rounds < 1:
                raise TooShort(f"R = floor((T-l-1)/2) = {self.rounds} < 1")
            if self.kind == "lsrand++":
                p = self.mix_prob
                if p is None or not (0.0 <= p <= 1.0):
                    raise BadProbability(f"mix probability {p!r} outside [0, 1]")
        else:
            raise ValidationError(f"unknown distribution kind {self.kind!r}")

    @property
    def k(self) -> int:
        return self.split[0] + self.split[1]

    @property
    def rounds(self) -> int:
        """R = floor((T - l - 1)/2), the number of loop counts drawn from."""
        return (self.steps - self.straight_len - 1) // 2

    @cached_property
    def support(self) -> Tuple[Tuple[AdversaryScript, float], ...]:
        if self.kind == "explicit":
            return self.explicit_support
        T, ell, R, k = self.steps, self.straight_len, self.rounds, self.k
        p = 1.0 if self.kind == "lsrand" else self.mix_prob
        out = []
        if p > 0:
            w = p / (2 * R)
            for j in range(R):
                out.append((_script([("L", j), ("S", ell), ("I", T - 2 * j - ell)], k, self.split), w))
                out.append(
                    (_script([("I", 1), ("L", j), ("S", ell), ("I", T - 1 - 2 * j - ell)], k, self.split), w)
                )
        if p < 1:
            w = (1.0 - p) / 2
            out.append((_script([("L", T // 2), ("I", T % 2)], k, self.split), w))
            out.append((_script([("I", 1), ("L", (T - 1) // 2), ("I", (T - 1) % 2)], k, self.split), w))
        return tuple(out)

    def to_text(self) -> str:
        split = ""
        if self.split != canonical_split(self.k):
            split = f" split:{self.split[0]},{self.split[1]}"
        if self.kind == "lsrand":
            return f"lsrand:{self.straight_len}{split}"
        if self.kind == "lsrand++":
            return f"lsrand++:{self.mix_prob!r}:{self.straight_len}{split}"
        return "; ".join(f"{w!r}: {s.to_text()}" for s, w in self.support)

    def __str__(self) -> str:
        return self.to_text()


def point_mass(script: AdversaryScript) -> AdversaryDistribution:
    return AdversaryDistribution("explicit", script.split, explicit_support=((script, 1.0),))


def build_lsrand(T: int, k: int, ell: Optional[int] = None, split=None) -> AdversaryDistribution:
    """Random loop count j in [0, R) and a fair coin for one leading idle step."""
    if ell is None:
        ell = default_straight_len(T, even_remainder=False)
    split = canonical_split(k) if split is None else _check_split(split, k)
    return AdversaryDistribution("lsrand", split, steps=T, straight_len=ell)


def build_lsrandpp(
    T: int, k: int, ell: Optional[int] = None, p: float = 1.0, split=None
) -> AdversaryDistribution:
    """Weight p on ``build_lsrand``, the rest split over two pure-looping scripts."""
    if not (0.0 <= p <= 1.0):
        raise BadProbability(f"mix probability {p!r} outside [0, 1]")
    if ell is None:
        ell = default_straight_len(T, even_remainder=False)
    split = canonical_split(k) if split is None else _check_split(split, k)
    return AdversaryDistribution("lsrand++", split, steps=T, straight_len=ell, mix_prob=float(p))


# parsing

_SEG_RE = re.compile(r"^([LSIAB])(?:\*(\d+))?$")


def _parse_int(s: str, what: str) -> int:
    if not re.fullmatch(r"\d+", s):
        raise ParseError(f"bad {what} {s!r}")
    return int(s)


def _parse_float(s: str, what: str) -> float:
    try:
        return float(s)
    except ValueError as exc:
        raise ParseError(f"bad {what} {s!r}") from exc


def _parse_single(text: str, k: int, T: Optional[int]):
    toks = text.split()
    split = None
    rest = []
    for tok in toks:
        if tok.startswith("split:"):
            parts = tok[len("split:"):].split(",")
            if len(parts) != 2:
                raise ParseError(f"bad split token {tok!r}")
            split = tuple(_parse_int(p, "team size") for p in parts)
        else:
            rest.append(tok)
    if not rest:
        raise ParseError("empty adversary description")
    head = rest[0]
    name, _, arg = head.partition(":")
    if name in ("lsdet", "lsrand", "lsrand++", "sl") and len(rest) != 1:
        raise ParseError(f"{name!r} takes no further tokens")
    if name in ("lsdet", "lsrand", "lsrand++"):
        if T is None:
            raise ParseError(f"{name!r} needs a finite horizon")
        if name == "lsdet":
            ell = _parse_int(arg, "straight length") if arg else None
            if split is not None:
                s = build_lsdet(T, k, ell)
                return AdversaryScript(s.segments, _check_split(split, k))
            return build_lsdet(T, k, ell)
        if name == "lsrand":
            ell = _parse_int(arg, "straight length") if arg else None
            return build_lsrand(T, k, ell, split)
        if not arg:
            raise ParseError("lsrand++ needs a mix probability, e.g. lsrand++:0.866")
        p_str, _, ell_str = arg.partition(":")
        ell = _parse_int(ell_str, "straight length") if ell_str else None
        return build_lsrandpp(T, k, ell, _parse_float(p_str, "mix probability"), split)
    if name == "sl":
        if T is not None:
            raise ParseError("'sl' is a geometric-horizon adversary")
        if k != 2:
            raise ParseError("'sl' is defined for k=2")
        ell = math.inf if arg == "inf" else _parse_int(arg, "straight length")
        return build_geometric_sl(ell, k)

    cycle = None
    if rest[-1] in _CYCLES:
        cycle = rest.pop()
    segments = []
    for tok in rest:
        m = _SEG_RE.match(tok)
        if not m:
            raise ParseError(f"unknown adversary token {tok!r}")
        segments.append((m.group(1), int(m.group(2)) if m.group(2) is not None else 1))
    if cycle is not None and T is not None:
        # finite horizon: fill the remaining steps with the named primitive
        used = sum(2 * n if t == "L" else n for t, n in segments)
        if used > T:
            raise ParseError(f"prefix of {used} steps exceeds T={T}")
        left = T - used
        if cycle == "loop":
            segments += [("L", left // 2), ("I", left % 2)]
        else:
            segments.append(("S", left))
        cycle = None
    if split is None:
        split = canonical_split(k)
    return AdversaryScript(tuple(segments), _check_split(split, k), cycle)


def parse_adversary(
    text: str, k: int, T: Optional[int] = None
) -> Union[AdversaryScript, AdversaryDistribution]:
    """Parse the text form. ``T`` is the finite horizon, or None for geometric."""
    if not isinstance(text, str) or not text.strip():
        raise ParseError("empty adversary description")
    if ";" not in text and not re.match(r"^\s*[-+0-9.eE]+\s*:", text):
        return _parse_single(text, k, T)
    support = []
    for part in text.split(";"):
        w_str, sep, body = part.partition(":")
        if not sep:
            raise ParseError(f"weighted entry {part!r} lacks 'w:'")
        item = _parse_single(body, k, T)
        if not isinstance(item, AdversaryScript):
            raise ParseError("weighted lists may only contain scripts")
        support.append((item, _parse_float(w_str.strip(), "weight")))
    return AdversaryDistribution("explicit", support[0][0].split, explicit_support=tuple(support))


def as_distribution(adv: Union[AdversaryScript, AdversaryDistribution]) -> AdversaryDistribution:
    return point_mass(adv) if isinstance(adv, AdversaryScript) else adv


def script_from_actions(actions: Sequence[Union[StepAction, str]], split) -> AdversaryScript:
    """Build a finite script from an explicit action list."""
    segs = []
    for act in actions:
        tok = StepAction(act).value
        segs.append((tok, 1))
    return AdversaryScript(tuple(segs), _check_split(split))
