"""Batch experiment driver: dataset registry, seeded batches, CSV outputs.

Experiments write three artifacts into the output directory: runs.csv with
one row per run, aggregate.csv with per-configuration statistics, and
plot.script, a ready-to-run matplotlib script for the figures.  Batches are
deterministic given the spec; FRAPPE_WORKERS caps process-level parallelism.
"""

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Optional

import numpy as np

from .cones import orthant_cone
from .model import BanditInstance, load_instance_file
from .objective import characteristic_time_inverse
from .runner import RunConfig, run

RUNS_COLUMNS = ("run_id", "sampler", "param", "stopping_time", "correct", "wall_per_iter", "error")
AGGREGATE_COLUMNS = (
    "sampler",
    "param",
    "runs",
    "stopping_mean",
    "stopping_median",
    "stopping_std",
    "stopping_q25",
    "stopping_q75",
    "error_rate",
    "timeouts",
    "wall_per_iter_mean",
)
CURVE_COLUMNS = ("sampler", "t", "mean_error")
SCALING_COLUMNS = ("param", "mean_wall_per_iter")


def _data_json(name):
    with resources.files("frappe_bandits.data").joinpath(name).open() as fh:
        return json.load(fh)


def covboost_instance():
    """Vaccine booster trial benchmark: 20 arms, 3 immune responses,
    shared diagonal covariance from the pooled sample variances."""
    from .model import instance_from_dict

    return instance_from_dict(_data_json("covboost.json"))


def gaussian_rho_instance(rho=0.0):
    """5-arm, 2-objective benchmark with unit variances and correlation rho.

    The committed mean matrix is configuration, not ground truth; sweep
    conclusions are relative comparisons between samplers.
    """
    if not -1.0 < rho < 1.0:
        raise ValueError("rho must lie in (-1, 1)")
    data = _data_json("gaussian_rho_means.json")
    means = np.array(data["means"], dtype=float)
    cov = np.array([[1.0, rho], [rho, 1.0]])
    instance = BanditInstance(means=means, covariance=cov, name=f"gaussian-rho({rho})")
    return instance, orthant_cone(2)


def load_instance(name_or_path):
    """Resolve an instance reference: registry name, file: prefix, or path.

    gaussian-rho takes an optional correlation suffix, e.g. gaussian-rho:0.5.
    """
    ref = str(name_or_path)
    if ref == "covboost":
        return covboost_instance()
    if ref == "gaussian-rho" or ref.startswith("gaussian-rho:"):
        rho = float(ref.split(":", 1)[1]) if ":" in ref else 0.0
        return gaussian_rho_instance(rho)
    if ref.startswith("file:"):
        return load_instance_file(ref[5:])
    if os.path.exists(ref):
        return load_instance_file(ref)
    raise ValueError(f"unknown instance {name_or_path!r}")


@dataclass(frozen=True)
class ExperimentSpec:
    """One batch: an instance, a sampler list, run counts and seeds, and an
    optional one-parameter sweep (rho, K, or L)."""

    instance: str = "covboost"
    samplers: tuple = ("frappe",)
    delta: float = 0.1
    runs: int = 100
    base_seed: int = 0
    sweep: Optional[dict] = None
    out: Optional[str] = None
    threshold_mode: str = "practical"
    zmode: str = "proj"
    pair_mode: str = "allothers"
    max_t: int = 10**6
    trace_every: int = 0
    check_invariants: bool = False

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if self.sweep is not None:
            if self.sweep.get("parameter") not in ("rho", "K", "L"):
                raise ValueError("sweep parameter must be rho, K, or L")
            vals = self.sweep.get("values", ())
            if not len(vals) or not np.all(np.isfinite(np.asarray(vals, dtype=float))):
                raise ValueError("sweep values must be nonempty and finite")


@dataclass
class AggregateResult:
    runs: list = field(default_factory=list)  # dict rows, RUNS_COLUMNS
    aggregate: list = field(default_factory=list)  # dict rows, AGGREGATE_COLUMNS
    traces: dict = field(default_factory=dict)  # (sampler, param, run_id) -> ndarray


def _worker_count():
    env = os.environ.get("FRAPPE_WORKERS", "")
    if env:
        return max(1, int(env))
    return max(1, os.cpu_count() or 1)


def _execute_one(job):
    run_id, sampler, param, instance, cone, config, omega = job
    try:
        result = run(instance, cone, config, omega)
        return run_id, sampler, param, result, ""
    except Exception as exc:  # per-row error, never abort the batch
        return run_id, sampler, param, None, repr(exc)


def _sweep_instances(spec):
    """Yield (param_label, instance, cone) for the spec's sweep, or the
    single base instance when no sweep is set."""
    if spec.sweep is None:
        inst, cone = load_instance(spec.instance)
        yield "", inst, cone
        return
    param = spec.sweep["parameter"]
    for value in spec.sweep["values"]:
        if param == "rho":
            inst, cone = gaussian_rho_instance(float(value))
        elif param == "K":
            inst, cone = make_scaling_instance(K=int(value), L=2)
        else:
            inst, cone = make_scaling_instance(K=25, L=int(value))
        yield repr(float(value)) if param == "rho" else str(int(value)), inst, cone


def run_batch(spec):
    """Execute a batch and return per-run rows plus aggregate statistics.

    Seeds are base_seed + run_id, the same for every sampler, so sampler
    comparisons are paired.  Results come back ordered by (sampler, param,
    run_id) regardless of worker scheduling.
    """
    jobs = []
    for param, instance, cone in _sweep_instances(spec):
        oracle_omega = None
        if "oracle" in spec.samplers:
            oracle_omega, _ = characteristic_time_inverse(
                instance, cone, zmode=spec.zmode, pair_mode=spec.pair_mode
            )
        for sampler in spec.samplers:
            for r in range(spec.runs):
                config = RunConfig(
                    delta=spec.delta,
                    threshold_mode=spec.threshold_mode,
                    zmode=spec.zmode,
                    pair_mode=spec.pair_mode,
                    sampler=sampler,
                    max_t=spec.max_t,
                    seed=spec.base_seed + r,
                    trace_every=spec.trace_every,
                    check_invariants=spec.check_invariants,
                )
                omega = oracle_omega if sampler == "oracle" else None
                jobs.append((r, sampler, param, instance, cone, config, omega))

    workers = min(_worker_count(), len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_execute_one, jobs, chunksize=4))
    else:
        outcomes = [_execute_one(job) for job in jobs]

    result = AggregateResult()
    for run_id, sampler, param, res, error in outcomes:
        if res is None:
            row = {
                "run_id": run_id,
                "sampler": sampler,
                "param": param,
                "stopping_time": "",
                "correct": "",
                "wall_per_iter": "",
                "error": error,
            }
        else:
            row = {
                "run_id": run_id,
                "sampler": sampler,
                "param": param,
                "stopping_time": res.stopping_time,
                "correct": "" if res.correct is None else int(res.correct),
                "wall_per_iter": repr(res.wall_time_per_iter),
                "error": "",
            }
            if res.trace is not None:
                result.traces[(sampler, param, run_id)] = res
        result.runs.append(row)

    for (sampler, param), rows in _group_rows(result.runs):
        stops = np.array([r["stopping_time"] for r in rows if r["stopping_time"] != ""], dtype=float)
        corr = [r["correct"] for r in rows if r["correct"] != ""]
        walls = np.array(
            [float(r["wall_per_iter"]) for r in rows if r["wall_per_iter"] != ""], dtype=float
        )
        timeouts = sum(1 for r in rows if r["stopping_time"] != "" and r["correct"] == "")
        result.aggregate.append(
            {
                "sampler": sampler,
                "param": param,
                "runs": len(rows),
                "stopping_mean": stops.mean() if len(stops) else "",
                "stopping_median": float(np.median(stops)) if len(stops) else "",
                "stopping_std": stops.std(ddof=1) if len(stops) > 1 else 0.0,
                "stopping_q25": float(np.quantile(stops, 0.25)) if len(stops) else "",
                "stopping_q75": float(np.quantile(stops, 0.75)) if len(stops) else "",
                "error_rate": (1.0 - np.mean([c for c in corr])) if corr else "",
                "timeouts": timeouts,
                "wall_per_iter_mean": walls.mean() if len(walls) else "",
            }
        )

    if spec.out:
        os.makedirs(spec.out, exist_ok=True)
        write_csv(os.path.join(spec.out, "runs.csv"), RUNS_COLUMNS, result.runs)
        write_csv(os.path.join(spec.out, "aggregate.csv"), AGGREGATE_COLUMNS, result.aggregate)
        write_plot_script(os.path.join(spec.out, "plot.script"))
    return result


def _group_rows(rows):
    keys = []
    groups = {}
    for r in rows:
        key = (r["sampler"], r["param"])
        if key not in groups:
            groups[key] = []
            keys.append(key)
        groups[key].append(r)
    return [(k, groups[k]) for k in keys]


def error_curve(spec):
    """Mean error indicator per time step, per sampler.

    Each run's indicator is taken from its trace while running; after a run
    stops, its frozen recommendation keeps contributing (0 when correct).
    Needs trace_every >= 1.
    """
    if spec.trace_every < 1:
        raise ValueError("error_curve needs trace_every >= 1")
    batch = run_batch(replace(spec, out=None))
    curves = []
    for sampler in spec.samplers:
        runs = [
            res
            for (smp, _param, _rid), res in sorted(batch.traces.items())
            if smp == sampler
        ]
        if not runs:
            continue
        horizon = max(int(res.trace[-1, 0]) for res in runs)
        K = int(runs[0].trace[0, 0])
        grid = [t for t in range(K, horizon + 1) if t % spec.trace_every == 0]
        for t in grid:
            total = 0.0
            for res in runs:
                ts = res.trace[:, 0]
                if t <= ts[-1]:
                    idx = int(np.searchsorted(ts, t))
                    total += res.trace[idx, 4]
                else:
                    total += 0.0 if res.correct else 1.0
            curves.append({"sampler": sampler, "t": t, "mean_error": total / len(runs)})
    if spec.out:
        os.makedirs(spec.out, exist_ok=True)
        write_csv(os.path.join(spec.out, "error_curve.csv"), CURVE_COLUMNS, curves)
        write_plot_script(os.path.join(spec.out, "plot.script"))
    return curves


def make_scaling_instance(K, L, seed=7, rho=0.9):
    """Synthetic instance with a fixed two-arm Pareto front.

    Arms beyond the two anchors are sampled strictly below the componentwise
    minimum of the anchors, so growing K or L never changes the front.
    """
    if K < 3 or L < 2:
        raise ValueError("need K >= 3 and L >= 2")
    rng = np.random.default_rng(seed)
    a1 = np.ones(L)
    a1[0] = 2.0
    a2 = np.ones(L)
    a2[1] = 2.0
    floor_vec = np.minimum(a1, a2) - 0.3
    rest = floor_vec[None, :] - rng.uniform(0.0, 0.8, size=(K - 2, L))
    means = np.vstack([a1, a2, rest])
    cov = np.full((L, L), rho)
    np.fill_diagonal(cov, 1.0)
    instance = BanditInstance(means=means, covariance=cov, name=f"scaling(K={K},L={L})")
    return instance, orthant_cone(L)


def runtime_scaling(param, values, runs=3, base_seed=0, min_iters=1000, out=None):
    """Mean per-iteration wall time of the frappe sampler across a K or L sweep.

    Runs are capped just above min_iters with a tiny delta so the stopping
    rule cannot fire first; a warmup run absorbs one-time compilation cost.
    """
    if param not in ("K", "L"):
        raise ValueError("param must be K or L")
    rows = []
    warmed = False
    for value in values:
        if param == "K":
            instance, cone = make_scaling_instance(K=int(value), L=2)
        else:
            instance, cone = make_scaling_instance(K=25, L=int(value))
        walls = []
        for r in range(runs):
            config = RunConfig(
                delta=1e-9,
                sampler="frappe",
                max_t=instance.K + min_iters + 200,
                seed=base_seed + r,
            )
            if not warmed:
                run(instance, cone, config)
                warmed = True
            res = run(instance, cone, config)
            walls.append(res.wall_time_per_iter)
        rows.append({"param": int(value), "mean_wall_per_iter": float(np.mean(walls))})
    if out:
        os.makedirs(out, exist_ok=True)
        write_csv(os.path.join(out, f"runtime_{param}.csv"), SCALING_COLUMNS, rows)
        write_plot_script(os.path.join(out, "plot.script"))
    return rows


def write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(columns))
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


_PLOT_SCRIPT = """\
#!/usr/bin/env python3
\"\"\"Plot the CSVs produced next to this script (run from that directory).\"\"\"
import os

import matplotlib.pyplot as plt
import pandas as pd

if os.path.exists("runs.csv"):
    df = pd.read_csv("runs.csv")
    if df["stopping_time"].notna().any():
        fig, ax = plt.subplots()
        df.boxplot(column="stopping_time", by=["sampler", "param"], ax=ax)
        ax.set_ylabel("stopping time")
        fig.savefig("stopping_times.png", dpi=150)

if os.path.exists("error_curve.csv"):
    curve = pd.read_csv("error_curve.csv")
    fig, ax = plt.subplots()
    for sampler, sub in curve.groupby("sampler"):
        ax.plot(sub["t"], sub["mean_error"], label=sampler)
    ax.set_xlabel("t")
    ax.set_ylabel("mean error indicator")
    ax.legend()
    fig.savefig("error_curve.png", dpi=150)

for fname in ("runtime_K.csv", "runtime_L.csv"):
    if os.path.exists(fname):
        sc = pd.read_csv(fname)
        fig, ax = plt.subplots()
        ax.plot(sc["param"], sc["mean_wall_per_iter"], marker="o")
        ax.set_xlabel(fname[8])
        ax.set_ylabel("wall seconds per iteration")
        fig.savefig(fname.replace(".csv", ".png"), dpi=150)

print("figures written")
"""


def write_plot_script(path):
    with open(path, "w") as fh:
        fh.write(_PLOT_SCRIPT)
