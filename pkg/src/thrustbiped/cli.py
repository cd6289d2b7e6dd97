"""Command-line front end: run, sweep, validate.

Exit codes are stable so batch drivers can branch on them:
0 success, 2 config error, 3 the robot fell, 4 dynamics blow-up.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .export import write_bundle
from .simulate import run_scenario
from .vlip import capture_point

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FALL = 3
EXIT_BLOWUP = 4


def _default_out() -> str:
    return os.environ.get("THRUSTBIPED_OUT", "out")


def _default_jobs() -> int:
    return int(os.environ.get("THRUSTBIPED_JOBS", "1"))


def _load(path: str):
    try:
        return cfgmod.load_config(path)
    except FileNotFoundError:
        print(f"error: config file not found: {path}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)
    except cfgmod.ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _run_one(cfg, scenario_name: str, out_dir: Path) -> int:
    try:
        scenario, resolved = cfgmod.resolve_scenario(cfg, scenario_name)
    except cfgmod.ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    violations = cfgmod.physics_violations(cfg)
    if violations:
        for v in violations:
            print(f"error: {v}", file=sys.stderr)
        return EXIT_CONFIG
    log, metrics = run_scenario(scenario)
    write_bundle(out_dir, log, metrics, resolved)
    print(f"{scenario_name}: steps={metrics.steps} fell={metrics.fell} "
          f"-> {out_dir}")
    if not metrics.completed:
        return EXIT_BLOWUP
    if metrics.fell:
        return EXIT_FALL
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _load(args.config)
    return _run_one(cfg, args.scenario, Path(args.out) / args.scenario)


def _sweep_worker(payload):
    idx, value, cfg_json, param, scenario_name, out_root = payload
    cfg = json.loads(cfg_json)
    try:
        cfgmod.set_by_path(cfg, param, value)
        scenario, resolved = cfgmod.resolve_scenario(cfg, scenario_name)
        violations = cfgmod.physics_violations(cfg)
        if violations:
            raise cfgmod.ConfigError("; ".join(str(v) for v in violations))
        log, metrics = run_scenario(scenario)
        out = Path(out_root) / f"{param.replace('.', '_')}={value:g}"
        write_bundle(out, log, metrics, resolved)
        gait = scenario.gait
        m = scenario.morphology.total_mass
        g = scenario.morphology.g
        analytic = capture_point(0.5, gait.z0, m,
                                 gait.thrust_fraction * m * g, g)
        step_lengths = [float(np.hypot(e["target"][0], e["target"][1]))
                        for e in log.events]
        return {
            "index": idx, "value": value, "error": "",
            "fell": metrics.fell, "fell_forward": metrics.fell_forward,
            "steps": metrics.steps,
            "fall_time": metrics.fall_time if metrics.fall_time is not None else "",
            "peak_joint_torque": metrics.peak_joint_torque,
            "thruster_impulse": metrics.thruster_impulse,
            "analytic_capture_offset_at_0p5": analytic,
            "max_recovery_step": max(step_lengths) if step_lengths else 0.0,
        }
    except Exception as exc:  # recorded per-row; the sweep continues
        return {"index": idx, "value": value, "error": f"{type(exc).__name__}: {exc}",
                "fell": "", "fell_forward": "", "steps": "", "fall_time": "",
                "peak_joint_torque": "", "thruster_impulse": "",
                "analytic_capture_offset_at_0p5": "", "max_recovery_step": ""}


def cmd_sweep(args) -> int:
    cfg = _load(args.config)
    try:
        values = [float(v) for v in args.values.split(",") if v != ""]
    except ValueError:
        print("error: --values must be a comma-separated number list", file=sys.stderr)
        return EXIT_CONFIG
    if not values:
        print("error: empty values list", file=sys.stderr)
        return EXIT_CONFIG
    try:  # fail fast if the path cannot resolve
        probe = json.loads(json.dumps(cfg))
        cfgmod.set_by_path(probe, args.param, values[0])
    except cfgmod.ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out_root = Path(args.out) / f"sweep_{args.scenario}"
    cfg_json = json.dumps(cfg)
    payloads = [(i, v, cfg_json, args.param, args.scenario, str(out_root))
                for i, v in enumerate(values)]
    jobs = max(1, args.jobs)
    if jobs == 1:
        rows = [_sweep_worker(p) for p in payloads]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_worker, payloads))
    rows.sort(key=lambda r: r["index"])

    out_root.mkdir(parents=True, exist_ok=True)
    summary = out_root / "sweep_summary.csv"
    cols = ["value", "fell", "fell_forward", "steps", "fall_time",
            "peak_joint_torque", "thruster_impulse",
            "analytic_capture_offset_at_0p5", "max_recovery_step", "error"]
    with open(summary, "w", newline="") as f:
        f.write(",".join(cols) + "\r\n")
        for r in rows:
            f.write(",".join(str(r[c]) for c in cols) + "\r\n")
    print(f"sweep over {args.param}: {len(rows)} runs -> {summary}")
    for r in rows:
        tag = r["error"] or ("fell" if r["fell"] else "ok")
        print(f"  {args.param}={r['value']:g}: {tag}")
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        violations = cfgmod.validate_config(args.config)
    except FileNotFoundError:
        print(f"error: config file not found: {args.config}", file=sys.stderr)
        return EXIT_CONFIG
    if violations:
        print(f"{len(violations)} violation(s):")
        for v in violations:
            print(f"  {v}")
        return EXIT_CONFIG
    print("config is valid")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="thrustbiped",
        description="Thruster-assisted biped walking simulator",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario and export its bundle")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--scenario", required=True)
    p_run.add_argument("--out", default=_default_out())
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a scenario across parameter values")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--scenario", required=True)
    p_sweep.add_argument("--param", required=True,
                         help="dotted path, e.g. gait.thrust_fraction")
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated numbers")
    p_sweep.add_argument("--out", default=_default_out())
    p_sweep.add_argument("--jobs", type=int, default=_default_jobs())
    p_sweep.set_defaults(func=cmd_sweep)

    p_val = sub.add_parser("validate", help="schema and physics checks, no simulation")
    p_val.add_argument("--config", required=True)
    p_val.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
