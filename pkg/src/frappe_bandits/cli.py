"""Command-line simulator: pareto / oracle / run / bench subcommands."""

import argparse
import csv
import os
import sys

import numpy as np

from .harness import (
    ExperimentSpec,
    error_curve,
    load_instance,
    run_batch,
    runtime_scaling,
    write_csv,
)
from .objective import characteristic_time_inverse
from .pareto import dominance_witnesses, pareto_set
from .runner import TRACE_COLUMNS, RunConfig, run


def _add_instance_arg(parser):
    parser.add_argument(
        "--instance",
        required=True,
        help="instance name (covboost, gaussian-rho[:rho]) or a JSON file path",
    )


def cmd_pareto(args):
    instance, cone = load_instance(args.instance)
    pset = pareto_set(instance.means, cone)
    witnesses = dominance_witnesses(instance.means, cone)
    print(f"instance {instance.name or args.instance}: K={instance.K} L={instance.L}")
    print(f"pareto set: {list(pset.indices)}")
    rows = []
    for a in range(instance.K):
        label = instance.arm_names[a] if instance.arm_names else str(a)
        optimal = a in pset
        wit = int(witnesses[a])
        rows.append(
            {"arm": a, "name": label, "pareto": int(optimal), "dominated_by": "" if optimal else wit}
        )
        status = "pareto" if optimal else f"dominated by arm {wit}"
        print(f"  arm {a:2d}  {label:<28s} {status}")
    if args.csv:
        write_csv(args.csv, ("arm", "name", "pareto", "dominated_by"), rows)
        print(f"wrote {args.csv}")
    return 0


def cmd_oracle(args):
    instance, cone = load_instance(args.instance)
    trace = []

    omega, tinv = characteristic_time_inverse(
        instance, cone, fw_iters=args.iters, tol=args.tol, zmode=args.zmode
    )
    # re-run with a gap trace when requested (cheap relative to inspection value)
    if args.out:
        from .fw import optimize_allocation
        from .pareto import candidate_pairs

        pairs = candidate_pairs(pareto_set(instance.means, cone), mode=args.pairs)
        optimize_allocation(
            instance.means,
            instance.covariance,
            cone,
            pairs,
            iters=args.iters,
            gap_tol=args.tol,
            zmode=args.zmode,
            callback=lambda t, w, f, gap: trace.append(
                {"iter": t, "F": repr(f), "gap": repr(gap)}
            ),
        )
        write_csv(args.out, ("iter", "F", "gap"), trace)
        print(f"wrote {args.out}")
    np.set_printoptions(precision=6, suppress=True)
    print(f"optimal allocation: {omega}")
    print(f"inverse characteristic time: {tinv:.8g}")
    if tinv > 0:
        print(f"characteristic time: {1.0 / tinv:.6g}")
    return 0


def cmd_run(args):
    instance, cone = load_instance(args.instance)
    config = RunConfig(
        delta=args.delta,
        threshold_mode=args.threshold,
        zmode=args.zmode,
        pair_mode=args.pairs,
        sampler=args.sampler,
        max_t=args.max_t,
        seed=args.seed,
        trace_every=args.trace_every,
    )
    result = run(instance, cone, config)
    status = "timeout" if result.timed_out else "stopped"
    print(f"{status} at t={result.stopping_time}")
    print(f"recommended pareto set: {list(result.recommended.indices)}")
    if result.correct is not None:
        print(f"correct: {result.correct}")
    print(f"wall time per iteration: {result.wall_time_per_iter * 1e6:.1f} us")
    if args.out and result.trace is not None:
        rows = [dict(zip(TRACE_COLUMNS, row)) for row in result.trace]
        for row in rows:
            row["t"] = int(row["t"])
            row["arm_pulled"] = int(row["arm_pulled"])
        write_csv(args.out, TRACE_COLUMNS, rows)
        print(f"wrote {args.out}")
    return 0


def cmd_bench(args):
    samplers = tuple(args.samplers.split(","))
    out = args.out
    os.makedirs(out, exist_ok=True)
    if args.experiment == "covboost-stopping":
        spec = ExperimentSpec(
            instance="covboost",
            samplers=samplers,
            delta=args.delta,
            runs=args.runs,
            base_seed=args.seed,
            out=out,
        )
        result = run_batch(spec)
        _print_aggregate(result)
    elif args.experiment == "covboost-error":
        spec = ExperimentSpec(
            instance="covboost",
            samplers=samplers,
            delta=args.delta,
            runs=args.runs,
            base_seed=args.seed,
            trace_every=1,
            out=out,
        )
        curves = error_curve(spec)
        print(f"error curve rows: {len(curves)}")
    elif args.experiment == "rho-sweep":
        values = [float(v) for v in args.rhos.split(",")]
        spec = ExperimentSpec(
            instance="gaussian-rho",
            samplers=samplers,
            delta=args.delta,
            runs=args.runs,
            base_seed=args.seed,
            sweep={"parameter": "rho", "values": values},
            out=out,
        )
        result = run_batch(spec)
        _print_aggregate(result)
    elif args.experiment == "runtime-k":
        rows = runtime_scaling("K", [int(v) for v in args.ks.split(",")], out=out)
        for row in rows:
            print(f"K={row['param']:>3d}  {row['mean_wall_per_iter'] * 1e6:.1f} us/iter")
    elif args.experiment == "runtime-l":
        rows = runtime_scaling("L", [int(v) for v in args.ls.split(",")], out=out)
        for row in rows:
            print(f"L={row['param']:>3d}  {row['mean_wall_per_iter'] * 1e6:.1f} us/iter")
    else:
        raise ValueError(f"unknown experiment {args.experiment!r}")
    print(f"outputs in {out}")
    return 0


def _print_aggregate(result):
    for row in result.aggregate:
        label = f"{row['sampler']}" + (f" param={row['param']}" if row["param"] else "")
        mean = row["stopping_mean"]
        median = row["stopping_median"]
        mean_s = f"{mean:.1f}" if mean != "" else "n/a"
        median_s = f"{median:.1f}" if median != "" else "n/a"
        print(
            f"{label:<24s} runs={row['runs']:<4d} mean={mean_s:<9s} "
            f"median={median_s:<9s} error_rate={row['error_rate']}"
        )


def build_parser():
    parser = argparse.ArgumentParser(
        prog="frappe",
        description="Pareto set identification in multi-objective bandits: "
        "library simulator and experiment harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pareto", help="print the Pareto set and dominance witnesses")
    _add_instance_arg(p)
    p.add_argument("--csv", default="", help="optional CSV output path")
    p.set_defaults(func=cmd_pareto)

    p = sub.add_parser("oracle", help="optimal allocation and characteristic time")
    _add_instance_arg(p)
    p.add_argument("--iters", type=int, default=20000)
    p.add_argument("--tol", type=float, default=1e-6, help="Frank-Wolfe gap tolerance")
    p.add_argument("--zmode", default="proj", choices=("proj", "rays", "constrained"))
    p.add_argument("--pairs", default="allothers", choices=("nonpareto", "allothers"))
    p.add_argument("--out", default="", help="per-iteration gap trace CSV")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("run", help="one sequential identification run")
    _add_instance_arg(p)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--sampler", default="frappe", choices=("frappe", "uniform", "oracle"))
    p.add_argument("--threshold", default="practical", choices=("practical", "theoretical"))
    p.add_argument("--zmode", default="proj", choices=("proj", "rays", "constrained"))
    p.add_argument("--pairs", default="allothers", choices=("nonpareto", "allothers"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-t", dest="max_t", type=int, default=10**6)
    p.add_argument("--trace-every", dest="trace_every", type=int, default=0)
    p.add_argument("--out", default="", help="trace CSV path (needs --trace-every)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bench", help="batch experiments with CSV outputs")
    p.add_argument(
        "--experiment",
        required=True,
        choices=("covboost-stopping", "covboost-error", "rho-sweep", "runtime-k", "runtime-l"),
    )
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--samplers", default="frappe,uniform", help="comma list")
    p.add_argument("--rhos", default="-0.9,-0.5,0,0.5,0.9", help="rho sweep values")
    p.add_argument("--ks", default="5,10,20,40", help="runtime-k arm counts")
    p.add_argument("--ls", default="2,6,10", help="runtime-l objective counts")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
