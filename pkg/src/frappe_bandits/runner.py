"""The full sequential identification loop plus baseline samplers.

One run is: pull every arm once, then repeat { GLRT stopping check;
forced-exploration or Frank-Wolfe allocation step; C-tracking pull;
estimator update } until the statistic clears the threshold or the step
budget runs out.  The uniform and oracle baselines swap out only the
allocation; stopping and tracking are shared.
"""

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .fw import FwState, build_subdifferential, default_r_schedule, fw_update, solve_maximin
from .model import EstimatorState, in_model_class, sample
from .objective import (
    big_f,
    characteristic_time_inverse,
    evaluate_pairs,
    threshold,
    uniform_allocation,
)
from .pareto import ParetoSet, candidate_pairs, pareto_set

TRACE_COLUMNS = ("t", "F_hat", "statistic", "threshold", "err_indicator", "arm_pulled")

_SANDWICH_EPS = 1e-7  # float-accumulation slack on the exact tracking bounds

SAMPLERS = ("frappe", "uniform", "oracle")
THRESHOLD_MODES = ("practical", "theoretical")
PAIR_MODES = ("nonpareto", "allothers")
RUN_Z_MODES = ("proj", "rays", "constrained")


@dataclass(frozen=True)
class RunConfig:
    """Knobs for one sequential run.

    Defaults are the benchmark configuration: practical threshold, the
    dominance-witness scalarization, and candidate pairs spanning every
    (optimal, other) arm combination.
    """

    delta: float = 0.1
    threshold_mode: str = "practical"
    zmode: str = "proj"
    pair_mode: str = "allothers"
    sampler: str = "frappe"
    max_t: int = 10**6
    seed: int = 0
    m_max: Optional[float] = None  # None: use the instance bound
    trace_every: int = 0
    check_invariants: bool = False

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.threshold_mode not in THRESHOLD_MODES:
            raise ValueError(f"unknown threshold mode {self.threshold_mode!r}")
        if self.zmode not in RUN_Z_MODES:
            raise ValueError(f"unknown zmode {self.zmode!r}")
        if self.pair_mode not in PAIR_MODES:
            raise ValueError(f"unknown pair mode {self.pair_mode!r}")
        if self.sampler not in SAMPLERS:
            raise ValueError(f"unknown sampler {self.sampler!r}")


@dataclass
class RunResult:
    stopping_time: int
    recommended: ParetoSet
    correct: Optional[bool]  # None when timed out
    timed_out: bool
    wall_time_per_iter: float
    trace: Optional[np.ndarray] = None  # rows of TRACE_COLUMNS
    sandwich_violations: int = 0
    floor_violations: int = 0
    seed: int = 0


def glrt_statistic(estimate, covariance, cone, pairs, zmode="proj"):
    """Chernoff statistic: the aggregate objective with pull counts as weights.

    Homogeneity in the weights makes this t * F(N/t | estimate) without the
    division.  Empty pair lists (single-arm instances) give +inf: nothing to
    confuse.
    """
    if np.any(estimate.counts < 1):
        raise ValueError("GLRT statistic needs every arm pulled at least once")
    if not pairs.pairs:
        return math.inf
    return big_f(
        estimate.means, covariance, estimate.counts.astype(float), pairs, cone, zmode
    ).value


def stopping_check(statistic, t, config, counts):
    """True iff the statistic meets the threshold (boundary equality stops)."""
    return statistic >= threshold(t, config.delta, config.threshold_mode, counts)


def forced_exploration_due(t, K, estimate, m_max):
    """Uniform step due at t = K m^2 or whenever the estimate leaves the box.

    A schedule trigger opens a K-step uniform block in the sequential loop
    (one block contributes 1/K cumulative design mass to every arm, which is
    what sustains the 1/(2 sqrt(tK)) design floor); this predicate reports
    the trigger itself plus the out-of-box condition.
    """
    if _forced_schedule_trigger(t, K):
        return True
    return not in_model_class(estimate, m_max)


def _forced_schedule_trigger(t, K):
    if t % K != 0:
        return False
    q = t // K
    r = math.isqrt(q)
    return r * r == q


def c_tracking_arm(counts, cumulative_omega):
    """Lowest-index arm whose pull count most lags its cumulative allocation."""
    return int(np.argmin(counts - cumulative_omega))


def run(instance, cone, config, omega_oracle=None):
    """Execute one seeded run and return its result.

    The oracle sampler needs the optimal allocation at the true means; it is
    computed here when not supplied (pass it in when batching runs).
    """
    K = instance.K
    if config.max_t < 4 * K:
        raise ValueError("max_t must be at least 4K")
    if config.sampler == "oracle" and omega_oracle is None:
        omega_oracle, _ = characteristic_time_inverse(
            instance, cone, zmode=config.zmode, pair_mode=config.pair_mode
        )
    if omega_oracle is not None:
        omega_oracle = np.asarray(omega_oracle, dtype=float)

    engine = _pick_engine(config)
    return engine(instance, cone, config, omega_oracle)


def _pick_engine(config):
    if FORCE_PYTHON_ENGINE or config.zmode == "constrained":
        return _run_python
    from . import _kernel

    if _kernel.AVAILABLE:
        return _kernel.run_compiled
    return _run_python


FORCE_PYTHON_ENGINE = False


def _run_python(instance, cone, config, omega_oracle):
    """Reference engine: composes the module operations step by step."""
    rng = np.random.default_rng(config.seed)
    K, L = instance.K, instance.L
    m_max = config.m_max if config.m_max is not None else instance.m_max
    cov = instance.covariance
    uniform = uniform_allocation(K)
    true_mask = pareto_set(instance.means, cone).mask()

    est = EstimatorState(K, L)
    for a in range(K):
        est.update(a, sample(instance, a, rng))
    cum_alloc = np.ones(K)
    fw_state = FwState(K, t=K, cumulative_x=np.ones(K))

    trace_rows = [] if config.trace_every > 0 else None
    sandwich_viol = 0
    floor_viol = 0
    t = K
    forced_until = 0
    stopped = False
    started = time.perf_counter()

    while True:
        pset = pareto_set(est.means, cone)
        pairs = candidate_pairs(pset, config.pair_mode)
        stat = glrt_statistic(est, cov, cone, pairs, config.zmode)
        thr = threshold(t, config.delta, config.threshold_mode, est.counts)

        tracing = trace_rows is not None and t % config.trace_every == 0
        if tracing:
            err = 0.0 if np.array_equal(pset.mask(), true_mask) else 1.0
            f_hat = _f_hat(instance, cone, config, est, pairs, fw_state, omega_oracle, uniform)

        if stat >= thr:
            stopped = True
            if tracing:
                trace_rows.append((t, f_hat, stat, thr, err, -1))
            break
        if t >= config.max_t:
            if tracing:
                trace_rows.append((t, f_hat, stat, thr, err, -1))
            break

        if config.sampler == "frappe":
            if _forced_schedule_trigger(t, K):
                forced_until = t + K
            if t < forced_until or not in_model_class(est, m_max):
                fw_state = fw_update(fw_state, uniform)
                alloc = uniform
            else:
                w = np.maximum(fw_state.omega, 1e-12)
                evals = evaluate_pairs(est.means, cov, w, pairs, cone, config.zmode)
                sub = build_subdifferential(evals, default_r_schedule(t, K))
                x = solve_maximin(sub.gradients, fw_state.omega)
                fw_state = fw_update(fw_state, x)
                alloc = fw_state.omega
        elif config.sampler == "uniform":
            alloc = uniform
        else:
            alloc = omega_oracle

        cum_alloc = cum_alloc + alloc
        arm = c_tracking_arm(est.counts, cum_alloc)
        if tracing:
            trace_rows.append((t, f_hat, stat, thr, err, arm))
        est.update(arm, sample(instance, arm, rng))
        t += 1

        if config.check_invariants:
            gap = cum_alloc - est.counts
            if np.any(gap < -1.0 - _SANDWICH_EPS) or np.any(gap > K - 1.0 + _SANDWICH_EPS):
                sandwich_viol += 1
            if config.sampler == "frappe" and t >= 4 * K:
                if np.min(cum_alloc) / t < 1.0 / (2.0 * math.sqrt(t * K)) - 1e-12:
                    floor_viol += 1

    elapsed = time.perf_counter() - started
    iters = max(1, t - K + 1)
    timed_out = not stopped
    return RunResult(
        stopping_time=t,
        recommended=pset,
        correct=None if timed_out else bool(np.array_equal(pset.mask(), true_mask)),
        timed_out=timed_out,
        wall_time_per_iter=elapsed / iters,
        trace=np.array(trace_rows) if trace_rows is not None else None,
        sandwich_violations=sandwich_viol,
        floor_violations=floor_viol,
        seed=config.seed,
    )


def _f_hat(instance, cone, config, est, pairs, fw_state, omega_oracle, uniform):
    """Objective at the sampler's current design under the current estimate."""
    if not pairs.pairs:
        return math.inf
    if config.sampler == "frappe":
        w = np.maximum(fw_state.omega, 1e-12)
    elif config.sampler == "uniform":
        w = uniform
    else:
        w = np.maximum(omega_oracle, 1e-12)
    return big_f(est.means, instance.covariance, w, pairs, cone, config.zmode).value
