"""Command-line interface.

Exit codes: 0 success, 2 bad input or I/O failure, 3 verification failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .blocks import optimal_blocks, s_indices
from .errors import NoFeasiblePoint, ObstacleError
from .landscape import ObstacleLandscape, load_landscape
from .oracle import brute_force_max_D
from .plan import crossing_plan, frontier
from .sim import SimConfig, homogeneous_max_first_orders, level_exponent, replicate, thread_count

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_VERIFY = 3
ORACLE_MAX_ELL = 3

COMMANDS = ("analyze", "oracle", "simulate")
OPTION_DEFAULTS: dict[str, Any] = {
    "resolution": 1e-2,
    "t": 8.0,
    "dt": 1e-3,
    "cap": 100_000,
    "seed": 0,
    "replicas": 32,
    "levels": "",
    "record_interval": 0.1,
}


class InputError(Exception):
    pass


@dataclass(frozen=True)
class RunManifest:
    command: str
    landscape_path: str
    output_path: str | None
    options: dict

    @classmethod
    def from_dict(cls, doc: dict) -> RunManifest:
        known = {"command", "landscape_path", "output_path", "options"}
        extra = set(doc) - known
        if extra:
            raise InputError(f"unknown manifest keys: {sorted(extra)}")
        cmd = doc.get("command")
        if cmd not in COMMANDS:
            raise InputError(f"manifest command must be one of {COMMANDS}, got {cmd!r}")
        if "landscape_path" not in doc:
            raise InputError("manifest needs a landscape_path")
        opts = dict(doc.get("options") or {})
        bad = set(opts) - set(OPTION_DEFAULTS)
        if bad:
            raise InputError(f"unknown manifest options: {sorted(bad)}")
        merged = {**OPTION_DEFAULTS, **opts}
        return cls(cmd, str(doc["landscape_path"]), doc.get("output_path"), merged)


# ------------------------------------------------------------------ output


def _atomic_write(path: str | Path, text: str) -> None:
    path = Path(path)
    parent = path.parent if str(path.parent) else Path(".")
    if not parent.is_dir():
        raise InputError(f"output directory does not exist: {parent}")
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def _emit(doc: dict, out: str | None) -> None:
    text = _dump(doc)
    if out:
        _atomic_write(out, text)
    else:
        sys.stdout.write(text)


def _finite(v):
    return None if v is None or (isinstance(v, float) and not math.isfinite(v)) else v


# ---------------------------------------------------------------- commands


def analyze_report(landscape: ObstacleLandscape) -> dict:
    est = frontier(landscape)
    if landscape.ell == 0:
        report = {
            "s_indices": [0],
            "blocks": [0],
            "per_block": [],
            "x_star": [],
            "y_star": [],
            "c_star": [],
            "total_time": 0.0,
        }
    else:
        plan = crossing_plan(landscape)
        report = {
            "s_indices": s_indices(landscape),
            "blocks": list(optimal_blocks(landscape).cuts),
            "per_block": [{"c_tilde": k.c_tilde, "f": k.f_value} for k in plan.constants],
            "x_star": list(plan.x_star),
            "y_star": list(plan.y_star),
            "c_star": list(plan.c_star),
            "total_time": plan.total_time,
        }
    report.update(feasible=est.feasible, h_star=est.h_star, limit_over_t=est.limit_over_t)
    if est.partial is not None:
        report["partial"] = {"ell_hat_star": est.partial.ell_hat_star, "b_star": est.partial.b_star}
    return report


def cmd_analyze(landscape: ObstacleLandscape, opts: dict, out: str | None) -> int:
    _emit(analyze_report(landscape), out)
    return EXIT_OK


def oracle_report(landscape: ObstacleLandscape, resolution: float) -> tuple[dict, int]:
    if landscape.ell > ORACLE_MAX_ELL:
        raise InputError(
            f"the brute-force oracle supports at most {ORACLE_MAX_ELL} obstacles (got {landscape.ell}); "
            "its cost grows exponentially with the number of obstacles"
        )
    if landscape.ell == 0:
        raise InputError("the oracle needs at least one obstacle")
    est = frontier(landscape)
    plan_value = est.h_star**2 / 2 if est.feasible else None
    try:
        res = brute_force_max_D(landscape, resolution)
    except NoFeasiblePoint as exc:
        doc = {
            "feasible": False,
            "resolution": resolution,
            "plan_value": plan_value,
            "oracle_value": None,
            "abs_gap": None,
            "argmax": None,
            "note": str(exc),
        }
        return doc, EXIT_OK if not est.feasible else EXIT_VERIFY
    gap = abs(res.value - plan_value) if plan_value is not None else None
    doc = {
        "feasible": True,
        "resolution": resolution,
        "plan_value": plan_value,
        "oracle_value": res.value,
        "abs_gap": gap,
        "argmax": {"x": list(res.best.x), "y": list(res.best.y)},
        "note": None,
    }
    ok = gap is not None and gap <= 10 * resolution
    return doc, EXIT_OK if ok else EXIT_VERIFY


def cmd_oracle(landscape: ObstacleLandscape, opts: dict, out: str | None) -> int:
    doc, code = oracle_report(landscape, float(opts["resolution"]))
    _emit(doc, out)
    return code


def parse_levels(text: str) -> tuple[tuple[float, float], ...]:
    if not text or not text.strip():
        return ()
    out = []
    for item in text.split(","):
        try:
            x, a = item.split(":")
            out.append((float(x), float(a)))
        except ValueError as exc:
            raise InputError(f"bad level probe {item!r}; expected 'x:a'") from exc
    return tuple(out)


def simulate_outputs(landscape: ObstacleLandscape, opts: dict, threads: int | None = None) -> tuple[str, dict]:
    """CSV time series and JSON summary for a replicated simulation."""
    levels = parse_levels(opts["levels"])
    cfg = SimConfig(
        landscape,
        horizon=float(opts["t"]),
        dt=float(opts["dt"]),
        particle_cap=int(opts["cap"]),
        seed=int(opts["seed"]),
        record_levels=levels,
        record_interval=float(opts["record_interval"]),
    )
    n = int(opts["replicas"])
    if n < 2:
        raise InputError("replicas must be at least 2")
    summary = replicate(cfg, n, threads)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["replica", "time", "running_max", "population"])
    for r, res in enumerate(summary.results):
        for (tm, mx), (_, pop) in zip(res.max_trajectory, res.population):
            w.writerow([r, repr(round(tm, 12)), repr(mx), pop])
    t = cfg.horizon
    est = frontier(landscape)
    doc = {
        "landscape": landscape.to_json()["obstacles"],
        "t": t,
        "dt": cfg.dt,
        "cap": cfg.particle_cap,
        "seed": cfg.seed,
        "replicas": n,
        "final_max_over_t": {"mean": summary.final_max_over_t.mean, "stderr": summary.final_max_over_t.stderr},
        "final_population": {"mean": summary.population.mean, "stderr": summary.population.stderr},
        "pruned_mass": {"mean": summary.pruned_mass.mean, "stderr": summary.pruned_mass.stderr},
        "levels": [
            {
                "x": x,
                "a": a,
                "mean_count": e.mean,
                "stderr": e.stderr,
                "log_count_over_t": math.log(e.mean) / t if e.mean > 0 else None,
                "target_exponent": level_exponent(x, a),
            }
            for (x, a), e in zip(levels, summary.level_counts)
        ],
        "predicted_limit_over_t": est.limit_over_t,
        "homogeneous_two_term_over_t": homogeneous_max_first_orders(t) / t,
    }
    return buf.getvalue(), doc


def cmd_simulate(landscape: ObstacleLandscape, opts: dict, out: str | None, summary_path: str | None = None) -> int:
    if not out:
        raise InputError("simulate needs --out PATH for the CSV time series")
    out_p = Path(out)
    summary_p = Path(summary_path) if summary_path else out_p.with_suffix(".json")
    for p in (out_p, summary_p):
        if not (p.parent if str(p.parent) else Path(".")).is_dir():
            raise InputError(f"output directory does not exist: {p.parent}")
    text, doc = simulate_outputs(landscape, opts, thread_count())
    _atomic_write(out_p, text)
    _atomic_write(summary_p, _dump(doc))
    return EXIT_OK


# ------------------------------------------------------------------ parser


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="obstacle-bbm", description="Maximum of branching Brownian motion among obstacles.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--landscape", required=True, help="JSON landscape file")
        sp.add_argument("--out", default=None, help="output path (stdout if omitted, where allowed)")

    a = sub.add_parser("analyze", help="closed-form plan and predicted maximum")
    common(a)
    o = sub.add_parser("oracle", help="brute-force check of the closed form (at most 3 obstacles)")
    common(o)
    o.add_argument("--resolution", type=float, default=OPTION_DEFAULTS["resolution"])
    s = sub.add_parser("simulate", help="Monte Carlo simulation")
    common(s)
    s.add_argument("--t", type=float, default=OPTION_DEFAULTS["t"])
    s.add_argument("--dt", type=float, default=OPTION_DEFAULTS["dt"])
    s.add_argument("--cap", type=int, default=OPTION_DEFAULTS["cap"])
    s.add_argument("--seed", type=int, default=OPTION_DEFAULTS["seed"])
    s.add_argument("--replicas", type=int, default=OPTION_DEFAULTS["replicas"])
    s.add_argument("--levels", default=OPTION_DEFAULTS["levels"], help='probes "x:a,..." at time x*t above a*t')
    s.add_argument("--record-interval", type=float, default=OPTION_DEFAULTS["record_interval"])
    s.add_argument("--summary", default=None, help="JSON summary path (default: --out with .json suffix)")
    r = sub.add_parser("run", help="execute a JSON run manifest")
    r.add_argument("manifest")
    return p


def _dispatch(command: str, landscape_path: str, out: str | None, opts: dict, summary: str | None = None) -> int:
    landscape = load_landscape(landscape_path)
    if command == "analyze":
        return cmd_analyze(landscape, opts, out)
    if command == "oracle":
        return cmd_oracle(landscape, opts, out)
    return cmd_simulate(landscape, opts, out, summary)


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            try:
                doc = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError) as exc:
                raise InputError(f"cannot read manifest {args.manifest}: {exc}") from exc
            if not isinstance(doc, dict):
                raise InputError("manifest must be a JSON object")
            m = RunManifest.from_dict(doc)
            return _dispatch(m.command, m.landscape_path, m.output_path, m.options)
        opts = dict(OPTION_DEFAULTS)
        for key in OPTION_DEFAULTS:
            if hasattr(args, key):
                opts[key] = getattr(args, key)
        return _dispatch(args.command, args.landscape, args.out, opts, getattr(args, "summary", None))
    except (InputError, ObstacleError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
