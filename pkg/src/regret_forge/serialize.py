"""JSON form of the domain types, tagged with a schema version and a type name."""

from __future__ import annotations

import json
import math
from typing import Any, Dict

from .adversaries import AdversaryDistribution, AdversaryScript, parse_adversary
from .core import (
    EtaSchedule,
    Family,
    GainLedger,
    GameConfig,
    GapState,
    Horizon,
    PiecewiseDist,
    PiecewiseRate,
    RegretReport,
)
from .errors import SerializationError

SCHEMA = "regret-forge/1"


def _num(x: float):
    # JSON has no inf/nan; keep them as strings
    x = float(x)
    return x if math.isfinite(x) else repr(x)


def _unnum(x) -> float:
    return float(x)


def _horizon(h: Horizon) -> Dict[str, Any]:
    if h.is_finite:
        return {"kind": "finite", "steps": h.steps}
    return {"kind": "geometric", "stop_prob": h.stop_prob}


def _schedule(s: EtaSchedule) -> Dict[str, Any]:
    out: Dict[str, Any] = {"family": s.family.value}
    if s.family is Family.SINGLE:
        out["constant_rate"] = s.constant_rate
    elif s.family is Family.RANDOM:
        d = s.rate_dist
        if not isinstance(d, PiecewiseDist):
            raise SerializationError("only PiecewiseDist rate distributions can be serialized")
        out["rate_dist"] = {
            "starts": list(d.starts),
            "supports": [[[eta, w] for eta, w in sup] for sup in d.supports],
        }
    else:
        f = s.rate_fn
        if not isinstance(f, PiecewiseRate):
            raise SerializationError("only PiecewiseRate schedules can be serialized")
        out["rate_fn"] = {"starts": list(f.starts), "values": list(f.values)}
    return out


def to_dict(obj) -> Dict[str, Any]:
    if isinstance(obj, Horizon):
        body, kind = _horizon(obj), "Horizon"
    elif isinstance(obj, GameConfig):
        body, kind = {"horizon": _horizon(obj.horizon), "num_experts": obj.num_experts}, "GameConfig"
    elif isinstance(obj, EtaSchedule):
        body, kind = _schedule(obj), "EtaSchedule"
    elif isinstance(obj, RegretReport):
        body = {f: _num(getattr(obj, f)) for f in ("regret", "loop_part", "straight_part", "normalized", "truncation_bound")}
        kind = "RegretReport"
    elif isinstance(obj, GainLedger):
        body, kind = {"cumulative_gains": list(obj.cumulative_gains), "step": obj.step}, "GainLedger"
    elif isinstance(obj, GapState):
        body, kind = {"gap": obj.gap, "leader": obj.leader.value, "sizes": list(obj.sizes)}, "GapState"
    elif isinstance(obj, (AdversaryScript, AdversaryDistribution)):
        body = {"text": obj.to_text(), "num_experts": obj.k}
        if isinstance(obj, AdversaryDistribution) and obj.steps is not None:
            body["steps"] = obj.steps
        kind = type(obj).__name__
    else:
        raise SerializationError(f"cannot serialize {type(obj).__name__}")
    return {"schema": SCHEMA, "type": kind, **body}


def _parse_horizon(d: Dict[str, Any]) -> Horizon:
    kind = d.get("kind")
    if kind == "finite":
        return Horizon.finite(d["steps"])
    if kind == "geometric":
        return Horizon.geometric(d["stop_prob"])
    raise SerializationError(f"unknown horizon kind {kind!r}")


def _parse_schedule(d: Dict[str, Any]) -> EtaSchedule:
    fam = Family(d["family"])
    if fam is Family.SINGLE:
        return EtaSchedule.single(d["constant_rate"])
    if fam is Family.RANDOM:
        rd = d["rate_dist"]
        sups = tuple(tuple((float(e), float(w)) for e, w in sup) for sup in rd["supports"])
        return EtaSchedule.random(PiecewiseDist(tuple(rd["starts"]), sups))
    rf = d["rate_fn"]
    return EtaSchedule(fam, rate_fn=PiecewiseRate(tuple(rf["starts"]), tuple(rf["values"])))


def from_dict(d: Dict[str, Any]):
    if not isinstance(d, dict):
        raise SerializationError("expected a JSON object")
    if d.get("schema") != SCHEMA:
        raise SerializationError(f"unsupported schema {d.get('schema')!r}")
    kind = d.get("type")
    try:
        if kind == "Horizon":
            return _parse_horizon(d)
        if kind == "GameConfig":
            return GameConfig(_parse_horizon(d["horizon"]), d["num_experts"])
        if kind == "EtaSchedule":
            return _parse_schedule(d)
        if kind == "RegretReport":
            return RegretReport(**{f: _unnum(d[f]) for f in ("regret", "loop_part", "straight_part", "normalized", "truncation_bound")})
        if kind == "GainLedger":
            return GainLedger(tuple(d["cumulative_gains"]), d["step"])
        if kind == "GapState":
            return GapState(d["gap"], d["leader"], tuple(d["sizes"]))
        if kind in ("AdversaryScript", "AdversaryDistribution"):
            return parse_adversary(d["text"], d["num_experts"], d.get("steps"))
    except (KeyError, TypeError) as exc:
        raise SerializationError(f"malformed {kind} object: {exc}") from exc
    raise SerializationError(f"unknown type {kind!r}")


def dumps(obj, **kw) -> str:
    return json.dumps(to_dict(obj), **kw)


def loads(text: str):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SerializationError(f"invalid JSON: {exc}") from exc
    return from_dict(data)
