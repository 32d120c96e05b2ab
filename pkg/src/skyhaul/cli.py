"""Command-line front end: scenario generation, planning, parameter sweeps.

Commands:
  generate   write a random scenario JSON file
  plan       cluster, place the relay chain, plan a mission, validate, report
  sweep      completion-time curves over sensor count or G2U threshold

Exit codes: 0 success, 1 a mission validity check failed, 2 usage error,
3 infeasible configuration. Outputs are deterministic given the flags; the
SKYHAUL_WORKERS environment variable caps the sweep worker pool.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import pointmatch
from .baselines import InfeasiblePlanError, plan_cstp, plan_ttp
from .channel import CoverageError, InfeasibleConfigError, coverage_radii
from .clustering import cluster_sensors, write_clusters_csv
from .mission import evaluate, write_plan_csv, write_report_json
from .model import (ChannelParams, ScenarioError, ScenarioParseError,
                    apply_config_overrides, generate_scenario, load_scenario,
                    save_scenario)
from .partition import InfeasibleTopologyError, build_topology

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3

_WORKERS_ENV = "SKYHAUL_WORKERS"
_PLANNERS = {"pmtp": pointmatch.plan, "ttp": plan_ttp, "cstp": plan_cstp}
_ALGO_ORDER = ("pmtp", "ttp", "cstp")
_AXES = ("sensors", "snr-g2u-db")
_SWEEP_HEADER = "axis_value,seed,algo,completion_s,lower_bound_s,flight_s,hover_s\n"

_INFEASIBLE = (InfeasibleConfigError, InfeasibleTopologyError,
               InfeasiblePlanError, CoverageError)


def _read_config(path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ScenarioParseError(f"config file is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ScenarioParseError("config file must contain a JSON object")
    return data


def run_pipeline(scenario, algo: str):
    """Clustering through evaluation; returns every intermediate artifact."""
    radii = coverage_radii(scenario.params, scenario.bs_height_m)
    cluster_set = cluster_sensors(scenario, radii)
    topology = build_topology(cluster_set.cp_array(), scenario.bs_position_m, radii)
    plan = _PLANNERS[algo](scenario, cluster_set, topology, radii)
    report = evaluate(plan, scenario, topology, radii, cluster_set)
    return radii, cluster_set, topology, plan, report


def cmd_generate(args) -> int:
    params = ChannelParams()
    if args.config:
        params = apply_config_overrides(params, _read_config(args.config))
    scenario = generate_scenario(args.size, args.size, args.sensors,
                                 params=params, seed=args.seed)
    save_scenario(scenario, args.output)
    print(f"wrote {args.output}: {scenario.n_sensors} sensors over "
          f"{args.size:g} m x {args.size:g} m, seed {args.seed}")
    return EXIT_OK


def cmd_plan(args) -> int:
    scenario = load_scenario(args.scenario)
    if args.config:
        scenario = dataclasses.replace(
            scenario,
            params=apply_config_overrides(scenario.params,
                                          _read_config(args.config)))
    radii, cluster_set, topology, plan, report = run_pipeline(scenario, args.algo)
    if args.output:
        write_plan_csv(plan, f"{args.output}.plan.csv")
        write_report_json(report, f"{args.output}.report.json",
                          topology=topology, radii=radii, cluster_set=cluster_set)
        write_clusters_csv(scenario, cluster_set,
                           f"{args.output}.assignments.csv",
                           f"{args.output}.cps.csv")
    print(f"algo={args.algo} sensors={scenario.n_sensors} "
          f"k={cluster_set.k} m={topology.m_uavs} steps={len(plan.steps)}")
    print(f"completion_s={report.completion_s:.3f} "
          f"lower_bound_s={report.lower_bound_s:.3f} "
          f"gap={report.gap_ratio:.2%} flight_s={report.flight_s:.3f} "
          f"hover_s={report.hover_s:.3f}")
    if report.all_passed:
        print(f"checks passed ({len(report.checks)}/{len(report.checks)})")
        return EXIT_OK
    failed = [c.name for c in report.checks if not c.passed]
    print(f"checks FAILED: {', '.join(failed)}", file=sys.stderr)
    for c in report.checks:
        if not c.passed:
            print(f"  {c.name}: {c.detail}", file=sys.stderr)
    return EXIT_VALIDATION


def _parse_values(tokens, axis: str) -> list[float]:
    values = []
    for token in tokens:
        for part in token.split(","):
            if not part:
                continue
            try:
                values.append(float(part))
            except ValueError:
                raise ScenarioParseError(f"bad --values entry {part!r}") from None
    if not values:
        raise ScenarioParseError("--values is empty")
    if axis == "sensors":
        for v in values:
            if v != int(v) or v < 1:
                raise ScenarioParseError(
                    f"sensor counts must be positive integers, got {v!r}")
    return values


def _sweep_cell(cell):
    """One (axis value, seed) evaluation of all planners; pure and picklable."""
    axis, value, seed, n_sensors, size, overrides = cell
    params = ChannelParams()
    if overrides:
        params = apply_config_overrides(params, overrides)
    if axis == "snr-g2u-db":
        params = apply_config_overrides(params, {"snr_th_g2u_db": value})
    else:
        n_sensors = int(value)
    scenario = generate_scenario(size, size, n_sensors, params=params, seed=seed)
    radii = coverage_radii(scenario.params, scenario.bs_height_m)
    cluster_set = cluster_sensors(scenario, radii)
    topology = build_topology(cluster_set.cp_array(), scenario.bs_position_m, radii)
    rows, all_ok = [], True
    for algo in _ALGO_ORDER:
        plan = _PLANNERS[algo](scenario, cluster_set, topology, radii)
        report = evaluate(plan, scenario, topology, radii, cluster_set)
        all_ok = all_ok and report.all_passed
        rows.append((value, seed, algo, report.completion_s,
                     report.lower_bound_s, report.flight_s, report.hover_s))
    return rows, all_ok


def _worker_count() -> int:
    raw = os.environ.get(_WORKERS_ENV, "")
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ScenarioParseError(
                f"{_WORKERS_ENV} must be a positive integer, got {raw!r}") from None
        if n < 1:
            raise ScenarioParseError(
                f"{_WORKERS_ENV} must be a positive integer, got {raw!r}")
        return n
    return os.cpu_count() or 1


def cmd_sweep(args) -> int:
    if args.seeds < 1:
        raise ScenarioParseError("--seeds must be at least 1")
    values = _parse_values(args.values, args.axis)
    overrides = _read_config(args.config) if args.config else None
    cells = [(args.axis, value, seed, args.sensors, args.size, overrides)
             for value in values for seed in range(args.seeds)]
    workers = min(_worker_count(), len(cells))
    if workers > 1:
        # map() keeps submission order, so the CSV is deterministic
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_cell, cells))
    else:
        results = [_sweep_cell(cell) for cell in cells]
    fmt = (lambda v: str(int(v))) if args.axis == "sensors" else (lambda v: repr(v))
    n_rows = 0
    with open(args.output, "w") as f:
        f.write(_SWEEP_HEADER)
        for rows, _ in results:
            for value, seed, algo, completion, bound, flight, hover in rows:
                f.write(f"{fmt(value)},{seed},{algo},{completion!r},"
                        f"{bound!r},{flight!r},{hover!r}\n")
                n_rows += 1
    print(f"wrote {n_rows} rows to {args.output}")
    if all(ok for _, ok in results):
        return EXIT_OK
    print("some sweep cells failed validation", file=sys.stderr)
    return EXIT_VALIDATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skyhaul",
        description="Multi-UAV relay-chain data collection planning")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a random scenario JSON file")
    gen.add_argument("--sensors", type=int, required=True,
                     help="number of sensor nodes")
    gen.add_argument("--size", type=float, default=8000.0,
                     help="square region side in meters (default 8000)")
    gen.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    gen.add_argument("--config", help="JSON file overriding radio defaults")
    gen.add_argument("-o", "--output", required=True,
                     help="scenario file to write")
    gen.set_defaults(func=cmd_generate)

    pln = sub.add_parser("plan",
                         help="cluster, place the chain, plan, validate, report")
    pln.add_argument("scenario", help="scenario JSON file")
    pln.add_argument("--algo", choices=sorted(_PLANNERS), default="pmtp",
                     help="planner to run (default pmtp)")
    pln.add_argument("--config", help="JSON file overriding radio defaults")
    pln.add_argument("-o", "--output",
                     help="output prefix; writes <prefix>.plan.csv, "
                          "<prefix>.report.json, <prefix>.assignments.csv, "
                          "<prefix>.cps.csv")
    pln.set_defaults(func=cmd_plan)

    swp = sub.add_parser("sweep",
                         help="completion-time curves over a parameter axis")
    swp.add_argument("--axis", choices=_AXES, required=True,
                     help="sweep parameter")
    swp.add_argument("--values", nargs="+", required=True,
                     help="axis values (space or comma separated)")
    swp.add_argument("--seeds", type=int, default=10,
                     help="scenario seeds 0..N-1 per value (default 10)")
    swp.add_argument("--sensors", type=int, default=1000,
                     help="sensor count for non-sensor axes (default 1000)")
    swp.add_argument("--size", type=float, default=8000.0,
                     help="square region side in meters (default 8000)")
    swp.add_argument("--config", help="JSON file overriding radio defaults")
    swp.add_argument("-o", "--output", required=True, help="CSV file to write")
    swp.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _INFEASIBLE as e:
        print(f"infeasible: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ScenarioError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
