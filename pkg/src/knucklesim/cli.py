"""Command-line front end.

Three subcommands:

* ``simulate`` - run one controller from a config file, write the
  trajectory CSV and a metrics summary.
* ``compare``  - run every configured controller on the identical scenario,
  write per-controller trajectories plus a comparison matrix, and print a
  ranking table.
* ``validate`` - run the seeded structural property suite at the configured
  parameters and report pass/fail per property.

Exit codes: 0 success, 1 property failure, 2 configuration/validation
error, 3 runtime abort.  Angles in configs and CSVs are radians.
"""

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from .config import ConfigError, default_config, load_config
from .control import NotAnEquilibrium, RiccatiDiverged
from .dynamics import SingularMass
from .sim import (AssumptionViolated, Metrics, NonFinite, compute_metrics,
                  simulate)
from .validation import run_property_suite

EXIT_OK = 0
EXIT_PROPERTY_FAILURE = 1
EXIT_CONFIG_ERROR = 2
EXIT_RUNTIME_ABORT = 3

CSV_HEADER = ("t,alpha,beta,gamma,d,theta1,theta2,"
              "alpha_dot,beta_dot,gamma_dot,d_dot,theta1_dot,theta2_dot,"
              "u1,u2,u3,u4,E,V,Vdot")


def _fmt(x):
    return f"{x:.12g}"


def write_trajectory_csv(path, traj):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for row in traj.data:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_metrics_json(path, controller, traj, metrics):
    payload = {
        "controller": controller,
        "config_hash": traj.metadata["config_hash"],
        "metrics": metrics.as_dict(),
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_comparison_csv(path, results):
    """Metric-by-controller matrix; results is {name: Metrics}."""
    names = sorted(results)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("metric," + ",".join(names) + "\n")
        for metric in Metrics.METRIC_NAMES:
            cells = []
            for name in names:
                value = results[name].as_dict()[metric]
                cells.append(_fmt(float(value)))
            fh.write(metric + "," + ",".join(cells) + "\n")


def _run_one(cfg, name, out_dir):
    sim_cfg = cfg.sim_config(name)
    traj = simulate(sim_cfg, cfg.params)
    metrics = compute_metrics(traj, cfg.ref)
    write_trajectory_csv(os.path.join(out_dir, f"trajectory_{name}.csv"), traj)
    write_metrics_json(os.path.join(out_dir, f"metrics_{name}.json"),
                       name, traj, metrics)
    return traj, metrics


def _abort_message(name, exc):
    if isinstance(exc, AssumptionViolated):
        which = ("swing-bound assumption (Assumption 1: |theta| < pi/2)"
                 if exc.which == "swing"
                 else "positive-cable-length assumption (Assumption 2: d > 0)")
        return f"{name}: aborted at step {exc.row}: {which} violated"
    if isinstance(exc, NonFinite):
        return f"{name}: aborted at step {exc.row}: non-finite state"
    if isinstance(exc, SingularMass):
        return f"{name}: {exc}"
    if isinstance(exc, (RiccatiDiverged, NotAnEquilibrium)):
        return f"{name}: controller design failed: {exc}"
    return f"{name}: {exc}"


def cmd_simulate(args):
    try:
        cfg = load_config(args.config) if args.config else default_config()
        sim_cfg = cfg.sim_config(args.controller)  # validates controller name
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    out_dir = args.out or cfg.output_dir
    os.makedirs(out_dir, exist_ok=True)
    try:
        traj, metrics = _run_one(cfg, args.controller, out_dir)
    except (AssumptionViolated, NonFinite, SingularMass,
            RiccatiDiverged, NotAnEquilibrium) as exc:
        print("error: " + _abort_message(args.controller, exc), file=sys.stderr)
        return EXIT_RUNTIME_ABORT
    print(f"wrote trajectory_{args.controller}.csv "
          f"({traj.data.shape[0]} rows) and metrics_{args.controller}.json "
          f"to {out_dir}")
    return EXIT_OK


def _ranking_table(results):
    lines = []
    header = (f"{'controller':<14} {'peak|th1|':>10} {'peak|th2|':>10} "
              f"{'settle_a':>9} {'settle_b':>9} {'settle_g':>9} "
              f"{'settle_d':>9} {'objective':>9}")
    lines.append(header)
    lines.append("-" * len(header))
    order = sorted(results, key=lambda n: max(results[n].peak_theta1,
                                              results[n].peak_theta2))
    for name in order:
        m = results[name]
        lines.append(
            f"{name:<14} {m.peak_theta1:>10.4f} {m.peak_theta2:>10.4f} "
            f"{m.settling_time['alpha']:>9.2f} {m.settling_time['beta']:>9.2f} "
            f"{m.settling_time['gamma']:>9.2f} {m.settling_time['d']:>9.2f} "
            f"{'met' if m.objective_met else 'MISSED':>9}")
    lines.append("(sorted by worst swing peak; lower is better)")
    return "\n".join(lines)


def cmd_compare(args):
    try:
        cfg = load_config(args.config) if args.config else default_config()
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    names = sorted(cfg.controllers)
    if len(names) < 2:
        print("error: compare needs at least two controllers in the config",
              file=sys.stderr)
        return EXIT_CONFIG_ERROR
    out_dir = args.out or cfg.output_dir
    os.makedirs(out_dir, exist_ok=True)

    threads = max(1, int(os.environ.get("KNUCKLE_SIM_THREADS", "1")))
    results = {}
    failures = {}
    if threads == 1:
        runs = {name: _safe_run(cfg, name, out_dir) for name in names}
    else:
        with ThreadPoolExecutor(max_workers=min(threads, len(names))) as pool:
            futures = {name: pool.submit(_safe_run, cfg, name, out_dir)
                       for name in names}
            runs = {name: fut.result() for name, fut in futures.items()}
    for name, (metrics, exc) in runs.items():
        if exc is not None:
            failures[name] = exc
        else:
            results[name] = metrics

    for name in sorted(failures):
        print("error: " + _abort_message(name, failures[name]), file=sys.stderr)
    if results:
        write_comparison_csv(os.path.join(out_dir, "comparison.csv"), results)
        print(_ranking_table(results))
    if failures:
        print(f"warning: partial results ({len(results)}/{len(names)} "
              f"controllers completed)", file=sys.stderr)
        return EXIT_RUNTIME_ABORT
    return EXIT_OK


def _safe_run(cfg, name, out_dir):
    try:
        _, metrics = _run_one(cfg, name, out_dir)
        return metrics, None
    except (AssumptionViolated, NonFinite, SingularMass,
            RiccatiDiverged, NotAnEquilibrium) as exc:
        return None, exc


def cmd_validate(args):
    try:
        cfg = load_config(args.config) if args.config else default_config()
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    seed = args.seed if args.seed is not None else cfg.seed
    samples = args.samples if args.samples is not None else cfg.samples
    reports = run_property_suite(cfg.params, seed=seed, samples=samples)
    for report in reports:
        print(report.line())
    if all(r.passed for r in reports):
        print(f"all {len(reports)} properties hold "
              f"({samples} samples, seed {seed})")
        return EXIT_OK
    return EXIT_PROPERTY_FAILURE


def build_parser():
    parser = argparse.ArgumentParser(
        prog="knuckle-sim",
        description="Knuckle boom crane simulation and anti-sway control "
                    "experiments (angles in radians)")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run one controller")
    p_sim.add_argument("--config", help="experiment YAML file")
    p_sim.add_argument("--controller", required=True,
                       help="controller name from the config")
    p_sim.add_argument("--out", help="output directory (default from config)")
    p_sim.set_defaults(func=cmd_simulate)

    p_cmp = sub.add_parser("compare",
                           help="run all configured controllers on the "
                                "same scenario")
    p_cmp.add_argument("--config", help="experiment YAML file")
    p_cmp.add_argument("--out", help="output directory (default from config)")
    p_cmp.set_defaults(func=cmd_compare)

    p_val = sub.add_parser("validate",
                           help="check the structural dynamics properties")
    p_val.add_argument("--config", help="experiment YAML file")
    p_val.add_argument("--seed", type=int, help="sampling seed")
    p_val.add_argument("--samples", type=int, help="number of random states")
    p_val.set_defaults(func=cmd_validate)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
