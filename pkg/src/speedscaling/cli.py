"""Command-line driver for workload generation and the policy experiments.

Commands
--------
gen         build a job instance from an HTTP trace (cleanup, decimation,
            day replication, deadline assignment)
simulate    run one policy over an instance
race        run the offline optimum and all online policies, report metrics
sweep-q     energy of the q-scaled policy over a grid of q values
sweep-temp  maximum temperature per policy over a grid of cooling parameters

Every command writes a JSON manifest echoing its parameters, and all outputs
are deterministic given identical inputs and seeds.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import metrics, trace, workloads
from .model import Instance, read_instance_csv, write_instance_csv, write_schedule_csv
from .simulator import SimConfig, simulate
from .yds import find_critical_interval, yds_schedule

REPORT_HEADER = [
    "instance",
    "policy",
    "q",
    "alpha",
    "b",
    "energy",
    "energy_over_yds",
    "max_speed",
    "max_temp",
    "feasible",
]

RACE_POLICIES = ("avr", "oa", "qoa", "bkp_ev", "bkp_ep")


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write_manifest(path: Path, params: dict) -> None:
    path.write_text(json.dumps(params, sort_keys=True, indent=2) + "\n")


def _q_grid(lo: float, hi: float, step: float) -> list[float]:
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + i * step, 10) for i in range(n)]


def _b_grid(lo: float, hi: float, points: int) -> list[float]:
    return [float(b) for b in np.logspace(math.log10(lo), math.log10(hi), points)]


# ---------------------------------------------------------------------------
# gen
# ---------------------------------------------------------------------------


def cmd_gen(args) -> int:
    trace_path = Path(args.trace)
    if not trace_path.exists():
        print(f"error: trace file not found: {trace_path}", file=sys.stderr)
        return 2
    with open(trace_path) as fh:
        parsed = trace.parse_trace(fh)
    if not parsed.records:
        print(f"error: no parseable requests in {trace_path}", file=sys.stderr)
        return 2
    records = trace.substitute_empty_responses(parsed.records)
    records = trace.decimate(records, args.stride, args.offset)
    records = trace.replicate_days(records, args.copies, args.day_length)
    spec = workloads.WorkloadSpec.for_kind(
        args.kind,
        rng_seed=args.seed,
        **_spec_overrides(args),
    )
    instance = workloads.generate(records, spec)

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    name = args.name or args.kind
    write_instance_csv(instance, outdir / f"{name}.csv")
    _write_manifest(
        outdir / f"{name}.meta.json",
        {
            "command": "gen",
            "trace": str(trace_path),
            "skipped_lines": parsed.skipped,
            "stride": args.stride,
            "offset": args.offset,
            "copies": args.copies,
            "day_length": args.day_length,
            "kind": spec.kind,
            "scale": spec.scale,
            "fixed_span": spec.fixed_span,
            "light_len": spec.light_len,
            "heavy_len": spec.heavy_len,
            "seed": spec.rng_seed,
            "records": len(records),
            "jobs": len(instance),
        },
    )
    print(f"wrote {len(instance)} jobs to {outdir / (name + '.csv')}")
    return 0


def _spec_overrides(args) -> dict:
    out = {}
    if args.scale is not None:
        out["scale"] = args.scale
    if args.span is not None:
        out["fixed_span"] = args.span
    if args.light_len is not None:
        out["light_len"] = args.light_len
    if args.heavy_len is not None:
        out["heavy_len"] = args.heavy_len
    return out


# ---------------------------------------------------------------------------
# simulate / race
# ---------------------------------------------------------------------------


def _schedule_for(instance: Instance, policy: str, q: float, tick: float):
    if policy == "yds":
        return yds_schedule(instance), []
    result = simulate(instance, SimConfig(policy=policy, q=q, tick=tick))
    return result.schedule, result.misses


def _report_row(name, instance, policy, q, alpha, b, schedule, yds_energy):
    power = metrics.PowerModel(alpha)
    e = metrics.energy(schedule, power)
    ratio = e / yds_energy if yds_energy and yds_energy > 0 else None
    temp = None
    if b is not None:
        temp = metrics.max_temperature(schedule, metrics.CoolingModel(b), power)
    feas = metrics.verify_feasibility(schedule, instance)
    return [
        name,
        policy,
        q if policy == "qoa" else None,
        alpha,
        b,
        e,
        ratio,
        schedule.max_speed(),
        temp,
        feas.feasible,
    ]


def _write_report(path: Path, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_HEADER)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def cmd_simulate(args) -> int:
    instance = read_instance_csv(args.instance)
    name = Path(args.instance).stem
    schedule, misses = _schedule_for(instance, args.policy, args.q, args.tick)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    label = args.policy if args.policy != "qoa" else f"qoa_{args.q}"
    write_schedule_csv(schedule, outdir / f"{name}.{label}.schedule.csv")
    yds_energy = None
    rows = [_report_row(name, instance, args.policy, args.q, args.alpha, args.b, schedule, yds_energy)]
    _write_report(outdir / f"{name}.{label}.report.csv", rows)
    _write_manifest(
        outdir / f"{name}.{label}.manifest.json",
        {
            "command": "simulate",
            "instance": str(args.instance),
            "policy": args.policy,
            "q": args.q,
            "tick": args.tick,
            "alpha": args.alpha,
            "b": args.b,
        },
    )
    for m in misses:
        print(f"miss: job {m.job_id} residual {m.residual:.6g} at deadline {m.deadline}")
    print(f"{args.policy}: energy(alpha={args.alpha}) = "
          f"{metrics.energy(schedule, metrics.PowerModel(args.alpha)):.6g}, "
          f"max speed = {schedule.max_speed():.6g}, misses = {len(misses)}")
    return 0


def cmd_race(args) -> int:
    instance = read_instance_csv(args.instance)
    name = Path(args.instance).stem
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)

    schedules = {"yds": yds_schedule(instance)}
    miss_counts = {"yds": 0}
    for policy in RACE_POLICIES:
        sched, misses = _schedule_for(instance, policy, args.q, args.tick)
        schedules[policy] = sched
        miss_counts[policy] = len(misses)
        if misses:
            print(f"warning: {policy} missed {len(misses)} deadlines", file=sys.stderr)
    for label, sched in schedules.items():
        write_schedule_csv(sched, outdir / f"{name}.{label}.schedule.csv")

    rows = []
    for alpha in args.alphas:
        yds_energy = metrics.energy(schedules["yds"], metrics.PowerModel(alpha))
        for label in ("yds",) + RACE_POLICIES:
            rows.append(
                _report_row(
                    name, instance, label, args.q, alpha, args.b,
                    schedules[label], yds_energy,
                )
            )
    _write_report(outdir / f"{name}.race.csv", rows)
    _write_manifest(
        outdir / f"{name}.race.manifest.json",
        {
            "command": "race",
            "instance": str(args.instance),
            "alphas": list(args.alphas),
            "q": args.q,
            "tick": args.tick,
            "b": args.b,
        },
    )
    print(f"wrote {outdir / (name + '.race.csv')} ({len(rows)} rows)")
    return 0


# ---------------------------------------------------------------------------
# sweep-q
# ---------------------------------------------------------------------------

_WORKER_INSTANCE: Instance | None = None


def _sweep_init(instance_path: str) -> None:
    global _WORKER_INSTANCE
    _WORKER_INSTANCE = read_instance_csv(instance_path)


def _sweep_task(task) -> float:
    q, alpha, tick = task
    result = simulate(_WORKER_INSTANCE, SimConfig(policy="qoa", q=q, tick=tick))
    return metrics.energy(result.schedule, metrics.PowerModel(alpha))


def sweep_q_energies(instance_path, q_grid, alpha, tick, jobs: int = 1) -> list[float]:
    tasks = [(q, alpha, tick) for q in q_grid]
    if jobs <= 1:
        _sweep_init(instance_path)
        return [_sweep_task(t) for t in tasks]
    with ProcessPoolExecutor(
        max_workers=jobs, initializer=_sweep_init, initargs=(str(instance_path),)
    ) as pool:
        return list(pool.map(_sweep_task, tasks))


def cmd_sweep_q(args) -> int:
    if args.q_lo < 1:
        print("error: q must be >= 1", file=sys.stderr)
        return 2
    name = Path(args.instance).stem
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    grid = _q_grid(args.q_lo, args.q_hi, args.q_step)
    energies = sweep_q_energies(args.instance, grid, args.alpha, args.tick, args.jobs)
    with open(outdir / f"{name}.sweep_q.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["q", "energy"])
        for q, e in zip(grid, energies):
            writer.writerow([_fmt(float(q)), _fmt(e)])
    best = int(np.argmin(energies))
    _write_manifest(
        outdir / f"{name}.sweep_q.manifest.json",
        {
            "command": "sweep-q",
            "instance": str(args.instance),
            "alpha": args.alpha,
            "tick": args.tick,
            "q_lo": args.q_lo,
            "q_hi": args.q_hi,
            "q_step": args.q_step,
            "argmin_q": grid[best],
        },
    )
    print(f"argmin q = {grid[best]} (energy {energies[best]:.6g}) over {len(grid)} points")
    return 0


# ---------------------------------------------------------------------------
# sweep-temp
# ---------------------------------------------------------------------------


def cmd_sweep_temp(args) -> int:
    instance = read_instance_csv(args.instance)
    name = Path(args.instance).stem
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    b_values = args.b if args.b else _b_grid(args.b_lo, args.b_hi, args.b_points)
    power = metrics.PowerModel(args.alpha)

    rows = []
    for policy in args.policies:
        schedule, _ = _schedule_for(instance, policy, args.q, args.tick)
        for b in b_values:
            cooling = metrics.CoolingModel(b, dt=args.dt)
            if b * args.dt >= 1.0:
                print(
                    f"warning: skipping b={b:g} (unstable Euler step b*dt >= 1)",
                    file=sys.stderr,
                )
                continue
            rows.append([policy, b, metrics.max_temperature(schedule, cooling, power)])
    with open(outdir / f"{name}.sweep_temp.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["policy", "b", "max_temp"])
        for row in rows:
            writer.writerow([_fmt(x) for x in row])
    _write_manifest(
        outdir / f"{name}.sweep_temp.manifest.json",
        {
            "command": "sweep-temp",
            "instance": str(args.instance),
            "alpha": args.alpha,
            "dt": args.dt,
            "tick": args.tick,
            "q": args.q,
            "b_values": [float(b) for b in b_values],
            "policies": list(args.policies),
        },
    )
    print(f"wrote {outdir / (name + '.sweep_temp.csv')} ({len(rows)} rows)")
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="speedscaling",
        description="Deadline-feasible speed scaling: offline optimum, online policies, experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="build an instance from an HTTP trace")
    p.add_argument("--trace", required=True)
    p.add_argument("--kind", required=True, choices=workloads.WORKLOAD_KINDS)
    p.add_argument("--out", required=True)
    p.add_argument("--name", default=None, help="output base name (default: kind)")
    p.add_argument("--stride", type=int, default=20, help="keep every stride-th request")
    p.add_argument("--offset", type=int, default=1, help="1-based start position")
    p.add_argument("--copies", type=int, default=5, help="number of replicated days")
    p.add_argument("--day-length", type=float, default=trace.SECONDS_PER_DAY)
    p.add_argument("--scale", type=float, default=None, help="span per work unit")
    p.add_argument("--span", type=float, default=None, help="fixed span seconds")
    p.add_argument("--light-len", type=float, default=None)
    p.add_argument("--heavy-len", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("simulate", help="run one policy over an instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--policy", required=True, choices=("yds",) + RACE_POLICIES)
    p.add_argument("--q", type=float, default=1.5)
    p.add_argument("--tick", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=3.0)
    p.add_argument("--b", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("race", help="all policies vs the offline optimum")
    p.add_argument("--instance", required=True)
    p.add_argument("--alphas", type=float, nargs="+", default=[3.0])
    p.add_argument("--q", type=float, default=1.5)
    p.add_argument("--tick", type=float, default=1.0)
    p.add_argument("--b", type=float, default=0.01)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_race)

    p = sub.add_parser("sweep-q", help="energy vs q for the q-scaled policy")
    p.add_argument("--instance", required=True)
    p.add_argument("--alpha", type=float, default=3.0)
    p.add_argument("--q-lo", type=float, default=1.0)
    p.add_argument("--q-hi", type=float, default=9.0)
    p.add_argument("--q-step", type=float, default=0.1)
    p.add_argument("--tick", type=float, default=1.0)
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep_q)

    p = sub.add_parser("sweep-temp", help="max temperature vs cooling parameter")
    p.add_argument("--instance", required=True)
    p.add_argument("--alpha", type=float, default=3.0)
    p.add_argument("--dt", type=float, default=0.1)
    p.add_argument("--q", type=float, default=1.5)
    p.add_argument("--tick", type=float, default=1.0)
    p.add_argument("--b", type=float, nargs="*", default=None, help="explicit b values")
    p.add_argument("--b-lo", type=float, default=1e-4)
    p.add_argument("--b-hi", type=float, default=10.0)
    p.add_argument("--b-points", type=int, default=11)
    p.add_argument(
        "--policies", nargs="+", default=["yds", *RACE_POLICIES],
        choices=("yds",) + RACE_POLICIES,
    )
    p.set_defaults(func=cmd_sweep_temp)
    p.add_argument("--out", required=True)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
