import numpy as np
import pytest

import frappe_bandits.runner as runner_mod
from frappe_bandits.cones import orthant_cone
from frappe_bandits.harness import covboost_instance
from frappe_bandits.model import BanditInstance, EstimatorState
from frappe_bandits.objective import threshold
from frappe_bandits.pareto import candidate_pairs, pareto_set
from frappe_bandits.runner import (
    RunConfig,
    RunResult,
    TRACE_COLUMNS,
    c_tracking_arm,
    forced_exploration_due,
    glrt_statistic,
    run,
    stopping_check,
)

SYM_MEANS = np.array([[1.0, 0.0], [0.0, 1.0]])


def _estimator(means, counts):
    means = np.asarray(means, dtype=float)
    est = EstimatorState(*means.shape)
    est.counts = np.asarray(counts, dtype=np.int64)
    est.sums = means * est.counts[:, None]
    est.means = means.copy()
    est.t = int(est.counts.sum())
    return est


def test_glrt_symmetric_counts():
    est = _estimator(SYM_MEANS, [8, 8])
    cone = orthant_cone(2)
    pairs = candidate_pairs(pareto_set(est.means, cone), "allothers")
    stat = glrt_statistic(est, np.eye(2), cone, pairs, "rays")
    assert abs(stat - 8 / 4) < 1e-12  # n/4 with unit gap and variance


def test_glrt_linear_in_counts():
    est1 = _estimator(SYM_MEANS, [6, 10])
    est2 = _estimator(SYM_MEANS, [12, 20])
    cone = orthant_cone(2)
    pairs = candidate_pairs(pareto_set(SYM_MEANS, cone), "allothers")
    s1 = glrt_statistic(est1, np.eye(2), cone, pairs, "rays")
    s2 = glrt_statistic(est2, np.eye(2), cone, pairs, "rays")
    assert abs(s2 - 2.0 * s1) < 1e-12


def test_glrt_zero_when_coincident_on_separating_rays():
    means = np.array([[1.0, 0.0], [1.0, 1.0]])  # arm 0 dominated, no advantage
    est = _estimator(means, [5, 5])
    cone = orthant_cone(2)
    pairs = candidate_pairs(pareto_set(means, cone), "nonpareto")
    # pair (1, 0): only ray with positive margin is e_1; zero it out
    means2 = np.array([[1.0, 1.0], [1.0, 1.0 - 1e-13]])
    est2 = _estimator(means2, [5, 5])
    pairs2 = candidate_pairs(pareto_set(means2, cone), "nonpareto")
    stat = glrt_statistic(est2, np.eye(2), cone, pairs2, "rays")
    assert stat < 1e-12


def test_glrt_requires_counts():
    est = _estimator(SYM_MEANS, [1, 0])
    cone = orthant_cone(2)
    pairs = candidate_pairs(pareto_set(SYM_MEANS, cone), "allothers")
    with pytest.raises(ValueError):
        glrt_statistic(est, np.eye(2), cone, pairs)


def test_stopping_check_boundary():
    cfg = RunConfig(delta=0.1)
    thr = threshold(1, 0.1, "practical")
    assert stopping_check(10.0, 1, cfg, np.array([1]))
    assert stopping_check(thr, 1, cfg, np.array([1]))  # equality stops
    assert not stopping_check(0.0, 1, cfg, np.array([1]))


def test_forced_exploration_schedule():
    est = _estimator(np.zeros((5, 2)), [4, 4, 4, 4, 4])
    assert forced_exploration_due(20, 5, est, 100.0)  # 20 = 5 * 2^2
    assert not forced_exploration_due(21, 5, est, 100.0)
    assert forced_exploration_due(45, 5, est, 100.0)  # 45 = 5 * 3^2
    out = _estimator(np.full((5, 2), 101.0), [4] * 5)
    assert forced_exploration_due(21, 5, out, 100.0)  # estimate left the box


def test_c_tracking_lowest_index_tiebreak():
    assert c_tracking_arm(np.array([1, 1, 1]), np.ones(3)) == 0
    assert c_tracking_arm(np.array([5, 0, 5]), np.array([4.0, 4.0, 4.0])) == 1


def test_easy_instance_stops_fast():
    means = np.array([[10.0, 10.0], [0.0, 0.0]])
    inst = BanditInstance(means=means, covariance=np.eye(2))
    res = run(inst, orthant_cone(2), RunConfig(delta=0.1, seed=0, max_t=10_000))
    assert not res.timed_out
    assert res.stopping_time < 100
    assert res.recommended.indices == (0,)
    assert res.correct is True


def test_single_arm_instance_stops_immediately():
    inst = BanditInstance(means=np.array([[1.0, 2.0]]), covariance=np.eye(2))
    res = run(inst, orthant_cone(2), RunConfig(delta=0.1, seed=0, max_t=100))
    assert res.stopping_time == 1
    assert res.recommended.indices == (0,)


def test_determinism_same_seed_same_result():
    inst = BanditInstance(means=SYM_MEANS * 2, covariance=np.eye(2))
    cfg = RunConfig(delta=0.05, seed=42, max_t=50_000, trace_every=1)
    r1 = run(inst, orthant_cone(2), cfg)
    r2 = run(inst, orthant_cone(2), cfg)
    assert r1.stopping_time == r2.stopping_time
    assert r1.recommended == r2.recommended
    assert r1.correct == r2.correct
    assert np.array_equal(r1.trace, r2.trace)


def test_seeds_differ():
    inst = BanditInstance(means=SYM_MEANS * 2, covariance=np.eye(2))
    stops = {
        run(inst, orthant_cone(2), RunConfig(delta=0.05, seed=s, max_t=50_000)).stopping_time
        for s in range(6)
    }
    assert len(stops) > 1


def test_timeout_flagged():
    # duplicated arms cannot be told apart: the statistic stays around the
    # noise scale, far below the threshold at this confidence
    means = np.array([[0.0, 0.0], [0.0, 0.0]])
    inst = BanditInstance(means=means, covariance=np.eye(2))
    res = run(inst, orthant_cone(2), RunConfig(delta=0.001, seed=0, max_t=200))
    assert res.timed_out
    assert res.stopping_time == 200
    assert res.correct is None


def test_tracking_invariants_hold():
    inst, cone = covboost_instance()
    for seed in range(3):
        res = run(inst, cone, RunConfig(delta=0.1, seed=seed, check_invariants=True))
        assert res.sandwich_violations == 0
        assert res.floor_violations == 0


def test_all_samplers_run_and_share_stopping():
    inst, cone = covboost_instance()
    omega = np.full(inst.K, 1.0 / inst.K)
    results = {}
    for sampler in ("frappe", "uniform", "oracle"):
        cfg = RunConfig(delta=0.1, seed=1, sampler=sampler, max_t=200_000)
        results[sampler] = run(inst, cone, cfg, omega_oracle=omega)
    for res in results.values():
        assert not res.timed_out
    # oracle given the uniform design must behave exactly like uniform
    assert results["oracle"].stopping_time == results["uniform"].stopping_time


def test_theoretical_threshold_mode_runs():
    means = np.array([[4.0, 4.0], [0.0, 0.0]])
    inst = BanditInstance(means=means, covariance=np.eye(2))
    res = run(inst, orthant_cone(2), RunConfig(delta=0.1, seed=0, threshold_mode="theoretical", max_t=100_000))
    assert not res.timed_out
    assert res.correct is True


def test_trace_schema_and_content():
    inst = BanditInstance(means=SYM_MEANS * 3, covariance=np.eye(2))
    cfg = RunConfig(delta=0.1, seed=0, max_t=5_000, trace_every=1)
    res = run(inst, orthant_cone(2), cfg)
    tr = res.trace
    assert tr is not None and tr.shape[1] == len(TRACE_COLUMNS)
    assert tr[0, 0] == inst.K  # first check happens right after initialization
    assert np.all(np.diff(tr[:, 0]) == 1)
    assert tr[-1, 5] == -1  # no arm pulled on the stopping row
    assert set(np.unique(tr[:, 4])) <= {0.0, 1.0}
    # threshold column is the practical threshold
    assert abs(tr[0, 3] - threshold(int(tr[0, 0]), 0.1, "practical")) < 1e-12


def test_engines_agree_semantically():
    # the compiled and reference engines implement the same process; their
    # float paths differ, so agreement is checked on recommendations plus
    # distributional stopping times
    means = np.array([[2.0, 0.0], [0.0, 2.0], [-1.0, -1.0]])
    inst = BanditInstance(means=means, covariance=np.eye(2))
    cone = orthant_cone(2)
    k_stops, p_stops = [], []
    for seed in range(25):
        cfg = RunConfig(delta=0.05, seed=seed, max_t=30_000)
        rk = run(inst, cone, cfg)
        runner_mod.FORCE_PYTHON_ENGINE = True
        try:
            rp = run(inst, cone, cfg)
        finally:
            runner_mod.FORCE_PYTHON_ENGINE = False
        assert rk.recommended == rp.recommended
        k_stops.append(rk.stopping_time)
        p_stops.append(rp.stopping_time)
    ratio = np.mean(k_stops) / np.mean(p_stops)
    assert 0.8 < ratio < 1.25


def test_angle_cone_run_end_to_end():
    # a run whose order is a planar sector rather than the orthant: under
    # the wide sector arm 1 dominates arm 0, so the answer is {1, 2}
    from frappe_bandits.cones import make_angle_cone

    cone = make_angle_cone(-np.pi / 12, 7 * np.pi / 12)
    means = np.array([[1.0, 0.0], [1.2, 0.9], [-0.2, 2.0]])
    inst = BanditInstance(means=means, covariance=np.eye(2))
    truth = pareto_set(means, cone).indices
    assert truth == (1, 2)
    for seed in range(5):
        cfg = RunConfig(delta=0.05, seed=seed, max_t=100_000)
        rk = run(inst, cone, cfg)
        assert not rk.timed_out
        runner_mod.FORCE_PYTHON_ENGINE = True
        try:
            rp = run(inst, cone, cfg)
        finally:
            runner_mod.FORCE_PYTHON_ENGINE = False
        assert rk.recommended == rp.recommended


def test_constrained_zmode_uses_reference_engine():
    # needs a unique optimum: with incomparable optima the constrained
    # minimum over preference directions degenerates to the separation
    # floor and the statistic cannot grow
    means = np.array([[3.0, 3.0], [0.0, 0.0]])
    inst = BanditInstance(means=means, covariance=np.eye(2))
    res = run(inst, orthant_cone(2), RunConfig(delta=0.1, seed=0, zmode="constrained", max_t=3_000))
    assert isinstance(res, RunResult)
    assert not res.timed_out
    assert res.recommended.indices == (0,)


def test_config_validation():
    with pytest.raises(ValueError):
        RunConfig(delta=0.0)
    with pytest.raises(ValueError):
        RunConfig(sampler="psips")
    with pytest.raises(ValueError):
        RunConfig(zmode="grid")  # oracle-only mode, not a runner mode
    with pytest.raises(ValueError):
        RunConfig(threshold_mode="asymptotic")
    with pytest.raises(ValueError):
        RunConfig(pair_mode="neighbours")
    inst = BanditInstance(means=SYM_MEANS, covariance=np.eye(2))
    with pytest.raises(ValueError):
        run(inst, orthant_cone(2), RunConfig(max_t=4))
