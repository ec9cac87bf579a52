"""Command-line frontend: eval, sweep, optimize, oracle, asymptote.

Every run is described by a manifest (flags, or a JSON file via --manifest
with flags taking precedence). Output goes to --out or stdout as CSV or
JSON; identical manifests give byte-identical output.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import itertools
import json
import math
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import optimize as opt
from .adversaries import parse_adversary
from .core import EtaSchedule, Family, GameConfig, Horizon, validate_config
from .errors import BadGrid, BadHorizon, DomainError, ParseError, RegretForgeError, SerializationError, ValidationError
from .regret import (
    best_response_dp_finite,
    best_response_vi_geometric,
    evaluate_adversary,
    geometric_sl_curve,
    monte_carlo_regret,
)
from .regret.csvio import ReportRow, write_rows
from .regret.oracles import DPOraclePolicy, auto_d_max, mwa_lag_prob
from .serialize import loads

COMMANDS = ("eval", "sweep", "optimize", "oracle", "asymptote")
GRID_AXES = ("alpha", "eta", "ell", "T", "delta", "p", "k")
NAMED = ("lsdet", "lsrand", "lsrand++", "sl")
DEFAULTS = {
    "command": "eval",
    "k": 2,
    "eta": "auto",
    "seed": 0,
    "format": None,
    "workers": 1,
    "target": "eta",
    "tol": 1e-12,
    "Ts": "1e4,1e5,1e6",
}


def parse_count(text) -> int:
    """Integer from '1000000', '1e6' or '10^6'."""
    if isinstance(text, (int, np.integer)) and not isinstance(text, bool):
        return int(text)
    s = str(text).strip()
    m = re.fullmatch(r"(\d+)\^(\d+)", s)
    if m:
        return int(m.group(1)) ** int(m.group(2))
    try:
        val = float(s)
    except ValueError as exc:
        raise ParseError(f"bad count {text!r}") from exc
    if not math.isfinite(val) or val != int(val):
        raise ParseError(f"count {text!r} is not an integer")
    return int(val)


def parse_float(text) -> float:
    s = str(text).strip()
    m = re.fullmatch(r"(\d+(?:\.\d+)?)\^(-?\d+)", s)
    if m:
        return float(m.group(1)) ** int(m.group(2))
    try:
        return float(s)
    except ValueError as exc:
        raise ParseError(f"bad number {text!r}") from exc


@dataclass(frozen=True)
class RunManifest:
    command: str
    config: GameConfig
    schedule: Optional[EtaSchedule]
    eta_spec: str
    adversary_spec: str
    seed: int = 0
    output_path: Optional[str] = None
    format: str = "csv"
    trials: Optional[int] = None
    grid: Tuple[Tuple[str, Tuple[float, ...]], ...] = ()
    workers: int = 1
    target: str = "eta"
    bracket: Tuple[float, float] = opt.DEFAULT_BRACKET
    d_max: Optional[int] = None
    tol: float = 1e-12
    Ts: Tuple[int, ...] = ()


def auto_alpha(horizon: Horizon, k: int) -> float:
    if horizon.is_finite or k != 2:
        return opt.optimal_alpha_finite(k) if horizon.is_finite else math.sqrt(8.0 * math.log(k))
    return opt.solve_geometric_system().alpha_star


def resolve_schedule(eta_spec: str, horizon: Horizon, k: int) -> EtaSchedule:
    """'auto', 'alpha=X' or a nonnegative constant rate."""
    spec = str(eta_spec).strip()
    if spec == "auto":
        return EtaSchedule.single(opt.alpha_to_eta(auto_alpha(horizon, k), horizon))
    if spec.startswith("alpha="):
        alpha = parse_float(spec[len("alpha="):])
        return EtaSchedule.single(opt.AlphaParam(alpha, horizon).rate)
    return EtaSchedule.single(parse_float(spec))


def default_adversary(horizon: Horizon) -> str:
    return "lsdet" if horizon.is_finite else "loop|straight"


def with_params(spec: str, ell=None, p=None) -> str:
    """Substitute grid values for l and p into a named adversary."""
    if ell is None and p is None:
        return spec
    toks = spec.split()
    name, _, arg = toks[0].partition(":")
    if name not in NAMED:
        raise BadGrid(f"axes ell/p need a named adversary ({', '.join(NAMED)}), got {spec!r}")
    ell_s = None if ell is None else str(int(ell))
    if name == "lsrand++":
        cur_p, _, cur_ell = arg.partition(":")
        p_s = repr(float(p)) if p is not None else cur_p
        if not p_s:
            raise BadGrid("lsrand++ needs a mix probability")
        head = f"lsrand++:{p_s}" + (f":{ell_s or cur_ell}" if (ell_s or cur_ell) else "")
    else:
        if p is not None:
            raise BadGrid(f"axis p applies only to lsrand++, not {name!r}")
        head = f"{name}:{ell_s}"
    return " ".join([head] + toks[1:])


def build_adversaries(spec: str, cfg: GameConfig):
    """Alternatives separated by '|'; the report takes the worst case among them."""
    T = cfg.horizon.steps if cfg.horizon.is_finite else None
    parts = [s.strip() for s in spec.split("|")]
    if any(not s for s in parts):
        raise ParseError(f"empty alternative in {spec!r}")
    return [(s, parse_adversary(s, cfg.k, T)) for s in parts]


def evaluate_spec(spec: str, sched: EtaSchedule, cfg: GameConfig, tol: float = 1e-12):
    best = None
    for text, adv in build_adversaries(spec, cfg):
        rep = evaluate_adversary(adv, sched, cfg, tol)
        if best is None or rep.regret > best[1].regret:
            best = (text, rep)
    return best


# grid parsing

def parse_grid_axis(text: str) -> Tuple[str, Tuple[float, ...]]:
    if "=" not in text:
        raise BadGrid(f"grid axis {text!r} must look like axis=values")
    axis, _, spec = text.partition("=")
    axis, spec = axis.strip(), spec.strip()
    if axis not in GRID_AXES:
        raise BadGrid(f"unknown grid axis {axis!r}; choose from {', '.join(GRID_AXES)}")
    try:
        if ".." in spec:
            lo, hi = spec.split("..")
            vals = [float(v) for v in range(parse_count(lo), parse_count(hi) + 1)]
        elif spec.count(":") == 2:
            lo, hi, step = (parse_float(x) for x in spec.split(":"))
            if step <= 0:
                raise BadGrid(f"grid step must be > 0 in {text!r}")
            n = int(math.floor((hi - lo) / step + 1e-9)) + 1
            vals = [lo + i * step for i in range(max(n, 0))]
        elif spec:
            vals = [parse_float(x) for x in spec.split(",") if x.strip()]
        else:
            vals = []
    except ParseError as exc:
        raise BadGrid(str(exc)) from exc
    if not vals:
        raise BadGrid(f"grid axis {axis!r} is empty")
    return axis, tuple(vals)


# manifest

def _load_manifest(path: Optional[str]) -> Dict[str, Any]:
    if not path:
        return {}
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SerializationError(f"cannot read manifest {path!r}: {exc}") from exc
    if not isinstance(data, dict):
        raise SerializationError("manifest must be a JSON object")
    return {k.replace("-", "_"): v for k, v in data.items()}


def _pick(args, man, key):
    val = getattr(args, key, None)
    if val is not None:
        return val
    if key in man:
        return man[key]
    return DEFAULTS.get(key)


def build_manifest(args) -> RunManifest:
    man = _load_manifest(args.manifest)
    command = _pick(args, man, "command")
    if command not in COMMANDS:
        raise ValidationError(f"unknown command {command!r}")
    kind = _pick(args, man, "horizon")
    if isinstance(kind, dict):  # core-schema horizon object
        man.setdefault("T", kind.get("steps"))
        man.setdefault("delta", kind.get("stop_prob"))
        kind = kind.get("kind")
    if args.geometric:
        kind = "geometric"
    T, delta = _pick(args, man, "T"), _pick(args, man, "delta")
    target = _pick(args, man, "target")
    if command == "optimize" and target in ("system", "mix") and T is None and delta is None:
        # these targets need no game; use a placeholder horizon
        T = 1
    if command == "asymptote" and T is None and delta is None:
        # horizons come from --Ts; the largest stands in for the base config
        Ts = _pick(args, man, "Ts")
        Ts = Ts.split(",") if isinstance(Ts, str) else Ts
        T = max(parse_count(t) for t in Ts if str(t).strip())
    if kind is None:
        kind = "geometric" if delta is not None and T is None else "finite"
    if kind == "finite":
        if T is None:
            raise BadHorizon("finite horizon needs --T")
        horizon = Horizon.finite(parse_count(T))
    elif kind == "geometric":
        if delta is None:
            raise BadHorizon("geometric horizon needs --delta")
        horizon = Horizon.geometric(parse_float(delta))
    else:
        raise BadHorizon(f"unknown horizon kind {kind!r}")
    cfg = GameConfig(horizon, parse_count(_pick(args, man, "k")))

    eta_spec = str(_pick(args, man, "eta"))
    sched_src = _pick(args, man, "eta_schedule")
    schedule = None
    if sched_src is not None:
        if isinstance(sched_src, dict):
            schedule = loads(json.dumps(sched_src))
        else:
            try:
                with open(sched_src) as fh:
                    schedule = loads(fh.read())
            except OSError as exc:
                raise SerializationError(f"cannot read schedule {sched_src!r}: {exc}") from exc
        if not isinstance(schedule, EtaSchedule):
            raise SerializationError("--eta-schedule must hold an EtaSchedule object")
        eta_spec = f"schedule:{schedule.family.value}"

    grid_raw = _pick(args, man, "grid") or []
    if isinstance(grid_raw, str):
        grid_raw = [grid_raw]
    grid = tuple(parse_grid_axis(g) for g in grid_raw)
    axes = [a for a, _ in grid]
    if len(set(axes)) != len(axes):
        raise BadGrid("grid axes must be distinct")

    bracket = _pick(args, man, "bracket") or opt.DEFAULT_BRACKET
    if isinstance(bracket, str):
        parts = bracket.split(",")
        if len(parts) != 2:
            raise ParseError(f"bracket must be 'lo,hi', got {bracket!r}")
        bracket = tuple(parse_float(x) for x in parts)
    Ts = _pick(args, man, "Ts")
    if isinstance(Ts, str):
        Ts = [x for x in Ts.split(",") if x.strip()]
    trials = _pick(args, man, "trials")
    d_max = _pick(args, man, "d_max")
    fmt = _pick(args, man, "format") or ("csv" if command in ("eval", "sweep") else "json")
    if fmt not in ("csv", "json"):
        raise ValidationError(f"unknown format {fmt!r}")
    workers = parse_count(_pick(args, man, "workers"))
    if workers < 1:
        raise ValidationError("workers must be >= 1")
    return RunManifest(
        command=command,
        config=cfg,
        schedule=schedule,
        eta_spec=eta_spec,
        adversary_spec=_pick(args, man, "adversary") or default_adversary(horizon),
        seed=parse_count(_pick(args, man, "seed")),
        output_path=_pick(args, man, "out"),
        format=fmt,
        trials=None if trials is None else parse_count(trials),
        grid=grid,
        workers=workers,
        target=target,
        bracket=(float(bracket[0]), float(bracket[1])),
        d_max=None if d_max is None else parse_count(d_max),
        tol=parse_float(_pick(args, man, "tol")),
        Ts=tuple(parse_count(t) for t in Ts),
    )


def schedule_for(m: RunManifest, cfg: GameConfig) -> EtaSchedule:
    sched = m.schedule if m.schedule is not None else resolve_schedule(m.eta_spec, cfg.horizon, cfg.k)
    validate_config(cfg, sched)
    return sched


# output helpers

def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _flat_csv(obj: Dict[str, Any]) -> str:
    keys = [k for k, v in obj.items() if not isinstance(v, (list, dict))]
    buf = io.StringIO()
    buf.write(",".join(keys) + "\n")
    buf.write(",".join(repr(obj[k]) if isinstance(obj[k], float) else str(obj[k]) for k in keys) + "\n")
    return buf.getvalue()


def _emit(text: str, m: RunManifest) -> None:
    if m.output_path:
        with open(m.output_path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _report_row(cfg: GameConfig, sched: EtaSchedule, eta_spec: str, adv_text: str, rep) -> ReportRow:
    return ReportRow(cfg.horizon, cfg.k, sched.family.value, eta_spec, adv_text, rep)


def _row_json(row: ReportRow) -> Dict[str, Any]:
    hz = row.horizon
    out = {"T": hz.steps} if hz.is_finite else {"delta": hz.stop_prob}
    out.update(k=row.k, family=row.family, eta_spec=row.eta_spec, adversary=row.adversary)
    for f in ("regret", "loop_part", "straight_part", "normalized", "truncation_bound"):
        out[f] = getattr(row.report, f)
    return out


def _rows_text(rows: List[ReportRow], m: RunManifest, extra_cols=None) -> str:
    if m.format == "json":
        payload = [_row_json(r) for r in rows]
        if extra_cols:
            for p, e in zip(payload, extra_cols):
                p.update(e)
        return _json_text(payload if len(payload) != 1 or m.command == "sweep" else payload[0])
    if extra_cols:
        rows = [
            replace(r, extra=tuple((k, repr(v) if isinstance(v, float) else str(v)) for k, v in e.items()))
            for r, e in zip(rows, extra_cols)
        ]
    return write_rows(rows)


# commands

def cmd_eval(m: RunManifest) -> str:
    cfg = m.config
    sched = schedule_for(m, cfg)
    adv_text, rep = evaluate_spec(m.adversary_spec, sched, cfg, m.tol)
    row = _report_row(cfg, sched, m.eta_spec, adv_text, rep)
    extra = None
    if m.trials is not None:
        adv = dict(build_adversaries(m.adversary_spec, cfg))[adv_text]
        est, err = monte_carlo_regret(adv, sched, cfg, m.trials, m.seed)
        extra = [{"mc_estimate": est, "mc_stderr": err, "mc_trials": m.trials, "seed": m.seed}]
    return _rows_text([row], m, extra)


def _grid_point(m: RunManifest, point: Dict[str, float]) -> ReportRow:
    cfg = m.config
    if "T" in point:
        cfg = replace(cfg, horizon=Horizon.finite(parse_count(point["T"])))
    if "delta" in point:
        cfg = replace(cfg, horizon=Horizon.geometric(point["delta"]))
    if "k" in point:
        cfg = GameConfig(cfg.horizon, parse_count(point["k"]))
    if "alpha" in point and "eta" in point:
        raise BadGrid("choose one of the axes alpha and eta")
    eta_spec = m.eta_spec
    if "alpha" in point:
        eta_spec = f"alpha={point['alpha']!r}"
    elif "eta" in point:
        eta_spec = repr(point["eta"])
    if m.schedule is not None and ("alpha" in point or "eta" in point):
        raise BadGrid("rate axes cannot be combined with --eta-schedule")
    sched = m.schedule if m.schedule is not None and eta_spec == m.eta_spec else resolve_schedule(eta_spec, cfg.horizon, cfg.k)
    validate_config(cfg, sched)
    spec = with_params(m.adversary_spec, point.get("ell"), point.get("p"))
    adv_text, rep = evaluate_spec(spec, sched, cfg, m.tol)
    return _report_row(cfg, sched, eta_spec, adv_text, rep)


def cmd_sweep(m: RunManifest) -> str:
    if not m.grid:
        raise BadGrid("sweep needs at least one --grid axis")
    if any(a in ("T",) for a, _ in m.grid) and not m.config.horizon.is_finite:
        raise BadGrid("axis T needs a finite horizon")
    if any(a in ("delta",) for a, _ in m.grid) and m.config.horizon.is_finite:
        raise BadGrid("axis delta needs a geometric horizon")
    axes = [a for a, _ in m.grid]
    points = [dict(zip(axes, vals)) for vals in itertools.product(*(v for _, v in m.grid))]
    if m.workers > 1:
        with ThreadPoolExecutor(max_workers=m.workers) as pool:
            rows = list(pool.map(lambda pt: _grid_point(m, pt), points))
    else:
        rows = [_grid_point(m, pt) for pt in points]
    return _rows_text(rows, m)


def cmd_optimize(m: RunManifest) -> Dict[str, Any]:
    if m.target == "system":
        sol = opt.solve_geometric_system()
        return {
            "alpha_star": sol.alpha_star,
            "gamma_star": sol.gamma_star,
            "h_star": sol.h_star,
            "beta_star": sol.beta_star,
            "residuals": list(sol.residuals),
        }
    if m.target == "mix":
        p, f = opt.optimize_mix_p()
        return {"p_star": p, "factor_star": f}
    if m.target != "eta":
        raise ValidationError(f"unknown optimize target {m.target!r}")
    cfg = m.config
    build_adversaries(m.adversary_spec, cfg)  # fail fast on a bad spec

    def objective(alpha: float) -> float:
        sched = EtaSchedule.single(opt.alpha_to_eta(alpha, cfg.horizon))
        return evaluate_spec(m.adversary_spec, sched, cfg, m.tol)[1].regret

    alpha, regret = opt.optimize_eta(objective, m.bracket)
    eta = opt.alpha_to_eta(alpha, cfg.horizon)
    return {
        "adversary": m.adversary_spec,
        "alpha_opt": alpha,
        "eta_opt": eta,
        "regret_opt": regret,
        "normalized_opt": cfg.horizon.normalize(regret),
        "bracket": list(m.bracket),
    }


def _moves_text(path: Sequence[int]) -> str:
    """Gap path as run-length tokens: L (up then down from 0), U, D, 0 (stay)."""
    steps = np.diff(path)
    toks: List[str] = []
    i = 0
    while i < steps.size:
        if steps[i] == 1 and i + 1 < steps.size and steps[i + 1] == -1 and path[i] == 0:
            toks.append("L")
            i += 2
            continue
        toks.append({1: "U", -1: "D", 0: "0"}[int(steps[i])])
        i += 1
    out: List[List] = []
    for t in toks:
        if out and out[-1][0] == t:
            out[-1][1] += 1
        else:
            out.append([t, 1])
    return " ".join(t if n == 1 else f"{t}*{n}" for t, n in out)


def _map_text(act: Sequence[int]) -> str:
    out: List[List] = []
    for a in act:
        t = {1: "U", 0: "0", -1: "D"}[a]
        if out and out[-1][0] == t:
            out[-1][1] += 1
        else:
            out.append([t, 1])
    return " ".join(t if n == 1 else f"{t}*{n}" for t, n in out)


def cmd_oracle(m: RunManifest) -> Dict[str, Any]:
    cfg = m.config
    if cfg.k != 2:
        raise DomainError("best-response oracles are defined for k=2")
    sched = schedule_for(m, cfg)
    if cfg.horizon.is_finite:
        res = best_response_dp_finite(DPOraclePolicy.mwa(sched), cfg.horizon.steps)
        path = res.optimal_path
        return {
            "T": cfg.horizon.steps,
            "eta_spec": m.eta_spec,
            "regret": res.regret,
            "structure": res.structure.value,
            "straight_len": res.threshold,
            "stay_steps": res.stay_steps,
            "moves": _moves_text(path),
            "path_sha256": hashlib.sha256(",".join(map(str, path)).encode()).hexdigest(),
        }
    if sched.family is not Family.SINGLE:
        raise DomainError("the geometric oracle needs a constant rate")
    eta, delta = sched.constant_rate, cfg.horizon.stop_prob
    lag = mwa_lag_prob(eta)
    d_max = m.d_max if m.d_max is not None else auto_d_max(lag, m.tol)
    res = best_response_vi_geometric(lag, delta, d_max, m.tol)
    curve = geometric_sl_curve(delta, eta, d_max)
    return {
        "delta": delta,
        "eta": eta,
        "eta_spec": m.eta_spec,
        "regret": res.regret,
        "structure": res.structure.value,
        "threshold": res.threshold,
        "d_max": d_max,
        "action_map": _map_text(res.action_map),
        "sl_sweep_max": float(curve.max()),
        "sl_sweep_argmax": int(curve.argmax()),
    }


def cmd_asymptote(m: RunManifest) -> Dict[str, Any]:
    cfg = m.config
    if not cfg.horizon.is_finite:
        raise BadHorizon("asymptote extrapolates over finite horizons")
    samples = []
    for T in m.Ts:
        c = GameConfig(Horizon.finite(T), cfg.k)
        sched = resolve_schedule(m.eta_spec, c.horizon, c.k) if m.schedule is None else m.schedule
        _, rep = evaluate_spec(m.adversary_spec, sched, c, m.tol)
        samples.append([T, rep.normalized])
    limit, resid = opt.asymptotic_extrapolate(samples)
    return {"adversary": m.adversary_spec, "eta_spec": m.eta_spec, "k": cfg.k, "samples": samples, "limit": limit, "residual": resid}


def run(m: RunManifest) -> str:
    if m.command == "eval":
        return cmd_eval(m)
    if m.command == "sweep":
        return cmd_sweep(m)
    handler = {"optimize": cmd_optimize, "oracle": cmd_oracle, "asymptote": cmd_asymptote}[m.command]
    obj = handler(m)
    return _json_text(obj) if m.format == "json" else _flat_csv(obj)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="regret-forge",
        description="Exact regret of multiplicative weights against adversary constructions.",
    )
    p.add_argument("command", nargs="?", choices=COMMANDS, default=None)
    p.add_argument("--horizon", choices=("finite", "geometric"))
    p.add_argument("--geometric", action="store_true", help="shorthand for --horizon geometric")
    p.add_argument("--T", help="number of steps (accepts 1e6 or 10^6)")
    p.add_argument("--delta", help="stopping probability per step")
    p.add_argument("--k", help="number of experts (default 2)")
    p.add_argument("--eta", help="constant rate, 'auto' (default) or 'alpha=X'")
    p.add_argument("--eta-schedule", dest="eta_schedule", metavar="FILE", help="EtaSchedule JSON file")
    p.add_argument("--adversary", help="adversary text, e.g. 'L*4 S*4', lsdet, lsrand++:0.866, sl:5, 'loop|straight'")
    p.add_argument("--seed", help="Monte Carlo seed")
    p.add_argument("--trials", help="Monte Carlo trials (eval only)")
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--manifest", help="JSON manifest; flags override its fields")
    p.add_argument("--grid", action="append", help="axis=lo:hi:step | lo..hi | v1,v2 (repeatable)")
    p.add_argument("--workers", help="parallel sweep workers")
    p.add_argument("--target", choices=("eta", "system", "mix"), help="what optimize solves for")
    p.add_argument("--bracket", help="alpha search bracket 'lo,hi' (default 0.1,20)")
    p.add_argument("--d-max", dest="d_max", help="largest gap in the geometric oracle")
    p.add_argument("--tol", help="tolerance for truncation and value iteration")
    p.add_argument("--Ts", help="comma-separated horizons for asymptote")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        manifest = build_manifest(args)
        _emit(run(manifest), manifest)
    except RegretForgeError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return ValidationError.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
