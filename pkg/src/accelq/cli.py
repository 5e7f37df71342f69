"""Command-line entry points.

Subcommands: ``tabular-run``, ``lqr-run``, ``bound``, ``solve-qstar`` and
``threshold-table``.  Experiment subcommands accept a JSON config via
``--config``; flags override the file values.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from collections import defaultdict
from pathlib import Path

import numpy as np

from . import bounds, frozenlake, harness
from .mdp import solve_q_star


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    return json.loads(Path(path).read_text())


def _parse_seed_args(args, payload: dict) -> None:
    if args.seed_list is not None:
        payload["seeds"] = [int(s) for s in args.seed_list.split(",") if s != ""]
    elif args.seeds is not None:
        payload["seeds"] = list(range(args.seeds))


def _common_overrides(args, payload: dict) -> None:
    _parse_seed_args(args, payload)
    if args.iters is not None:
        payload["iterations"] = args.iters
    if args.gamma is not None:
        payload["gamma"] = args.gamma
    if args.out is not None:
        payload["out"] = args.out
    if args.shared_samples is not None:
        payload["shared_samples"] = args.shared_samples


def _add_common_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON experiment config; flags override it")
    sub.add_argument("--seeds", type=int, help="run seeds 0..N-1")
    sub.add_argument("--seed-list", help="comma-separated explicit seed list")
    sub.add_argument("--iters", type=int, help="number of learning rounds T")
    sub.add_argument("--gamma", type=float, help="discount factor")
    sub.add_argument("--out", help="output directory")
    sub.add_argument("--jobs", type=int, default=1, help="parallel cell workers")
    sub.add_argument(
        "--shared-samples",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="share sample streams across algorithms (default on)",
    )


def _cmd_tabular_run(args) -> int:
    payload = _load_config(args.config)
    payload["task"] = "tabular"
    _common_overrides(args, payload)
    if args.map is not None:
        payload["map_name"] = args.map
    if args.m_values is not None:
        payload["m_values"] = [float(v) for v in args.m_values.split(",")]
    cfg = harness.ExperimentConfig.from_dict(payload)
    record = harness.run_config(cfg, jobs=args.jobs)
    _print_record(record)
    return 0


def _cmd_lqr_run(args) -> int:
    payload = _load_config(args.config)
    payload["task"] = "lqr"
    _common_overrides(args, payload)
    if args.variants is not None:
        payload["variants"] = [v for v in args.variants.split(",") if v]
    if args.hyper is not None:
        payload["hyper"] = [float(v) for v in args.hyper.split(",")]
    if args.noise_std is not None:
        payload["noise_std"] = args.noise_std
    cfg = harness.ExperimentConfig.from_dict(payload)
    record = harness.run_config(cfg, jobs=args.jobs)
    _print_record(record)
    return 0


def _print_record(record: harness.RunRecord) -> None:
    print(f"config {record.config_hash[:12]}")
    for cell in record.cells:
        crossings = ", ".join(
            f"<= {thr:g} @ {'never' if idx is None else idx}"
            for thr, idx in cell.crossings.items()
        )
        print(f"  {cell.label}: final mean {cell.final_mean:.6g} ({crossings})")
    if record.config.out:
        print(f"wrote {record.config.out}/")


def _cmd_bound(args) -> int:
    params = bounds.BoundParams.derive(
        args.gamma, args.m, args.iters, args.n, args.delta, args.r_max
    )
    payload = {
        "v_max": params.v_max,
        "h": params.h,
        "d_max": params.d_max,
        "bound": bounds.error_bound(params),
    }
    print(json.dumps(payload, indent=2, sort_keys=True))
    return 0


def _cmd_solve_qstar(args) -> int:
    grid = frozenlake.load_map(args.map)
    slip = frozenlake.SlipModel.slippery()
    mdp = frozenlake.build_mdp(grid, slip, args.gamma)
    q_star = solve_q_star(mdp, args.tol)
    if args.out is None:
        q_star.to_csv(sys.stdout)
    else:
        with open(args.out, "w", newline="") as fh:
            q_star.to_csv(fh)
        print(f"wrote {args.out}")
    return 0


def _read_trajectory_csv(path: str) -> dict[str, dict[int, list[float]]]:
    """Group per-seed curves by cell label from a trajectories CSV."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        if {"algo", "m", "seed", "iteration", "loss"} <= set(fields):
            label = lambda row: (
                f"aql(m={float(row['m']):g})" if row["algo"] == "aql" and row["m"] else row["algo"]
            )
            step_key, value_key = "iteration", "loss"
        elif {"variant", "seed", "step", "gain_error"} <= set(fields):
            label = lambda row: row["variant"]
            step_key, value_key = "step", "gain_error"
        else:
            raise ValueError(f"unrecognized CSV schema: {fields}")
        cells: dict[str, dict[int, list[float]]] = defaultdict(lambda: defaultdict(list))
        for row in reader:
            cells[label(row)][int(row["seed"])].append(float(row[value_key]))
    return cells


def _cmd_threshold_table(args) -> int:
    cells = _read_trajectory_csv(args.input)
    print(f"threshold {args.threshold:g}")
    for name in cells:
        curves = [np.asarray(c) for c in cells[name].values()]
        mean, _ = harness.aggregate(curves)
        idx = harness.first_crossing(mean, args.threshold)
        print(f"  {name}: {'not reached' if idx is None else idx}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="accelq",
        description="Momentum-accelerated Q-learning experiments and bounds",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tabular-run", help="multi-seed tabular learner comparison")
    _add_common_flags(p)
    p.add_argument("--map", help="bundled map name or path to a map file")
    p.add_argument("--m-values", help="comma-separated schedule parameters for aql")
    p.set_defaults(func=_cmd_tabular_run)

    p = sub.add_parser("lqr-run", help="parametric learner comparison on an LQR task")
    _add_common_flags(p)
    p.add_argument("--variants", help="comma-separated subset of vanilla,hb,nes")
    p.add_argument("--hyper", help="a,b,c constants, e.g. 0.9,0.2,0.2")
    p.add_argument("--noise-std", type=float, help="exploration noise std")
    p.set_defaults(func=_cmd_lqr_run)

    p = sub.add_parser("bound", help="evaluate the high-probability error bound")
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--m", type=float, required=True)
    p.add_argument("--iters", type=int, required=True, help="horizon T")
    p.add_argument("--n", type=int, required=True, help="number of state-action pairs")
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--r-max", type=float, default=1.0)
    p.set_defaults(func=_cmd_bound)

    p = sub.add_parser("solve-qstar", help="dynamic-programming oracle for a map")
    p.add_argument("--map", required=True, help="bundled map name or path")
    p.add_argument("--gamma", type=float, default=0.95)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--out", help="CSV path (stdout when omitted)")
    p.set_defaults(func=_cmd_solve_qstar)

    p = sub.add_parser("threshold-table", help="first crossing of the mean curve per cell")
    p.add_argument("--input", required=True, help="trajectories CSV from a run")
    p.add_argument("--threshold", type=float, required=True)
    p.set_defaults(func=_cmd_threshold_table)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
