"""Tests for detection metrics, the tuning objective, and the genetic search."""

import math
import warnings

import numpy as np
import pytest

from packdiag.fusion import DetectionOutcome, DetectorParams
from packdiag.pack import FaultSpec, SimConfig, simulate
from packdiag.pipeline import Telemetry
from packdiag.tuning import (
    EvaluationResult,
    FitnessEvaluator,
    GaConfig,
    MetricsConfig,
    compute_metrics,
    mga_optimize,
    objective,
    simplex_project,
)


def synthetic_outcome(times, labels, alarm_times, warmup):
    times = np.asarray(times, dtype=float)
    h = np.where(np.arange(times.size) < warmup, np.nan, 0.5)
    alarms = np.isin(times, alarm_times) & ~np.isnan(h)
    lab = np.asarray(labels)
    onset = None
    if (lab == 1).any():
        first = int(np.argmax(lab == 1))
        onset = float(times[first - 1]) if first > 0 else float(times[0])
    t_f = float(times[np.argmax(alarms)]) if alarms.any() else None
    return DetectionOutcome(times=times, h_stream=h, alarms=alarms,
                            t_f=t_f, t_a=onset)


@pytest.fixture(scope="module")
def tiny_scenarios():
    """Two short fault runs plus one normal run for evaluator tests."""
    teles = []
    for cell, seed in ((11, 31), (4, 32)):
        cfg = SimConfig(duration=160.0, rng_seed=seed,
                        fault=FaultSpec(fault_cell=cell, r_short=10.0,
                                        onset=90.0))
        teles.append(Telemetry.from_frames(simulate(cfg)))
    teles.append(Telemetry.from_frames(simulate(SimConfig(duration=160.0,
                                                          rng_seed=33))))
    return teles


class TestComputeMetrics:
    def test_counts_by_hand(self):
        times = np.arange(1.0, 21.0)
        labels = (times > 10).astype(int)
        out = synthetic_outcome(times, labels, [7.0, 12.0, 14.0, 15.0, 16.0],
                                warmup=4)
        res = compute_metrics(out, labels, MetricsConfig(t_r=1000.0))
        assert res.detected_abnormal == 4
        assert res.total_abnormal == 10
        assert res.adr == 0.4
        # normal post-warm-up frames are t = 5..10; one of them alarmed
        assert res.total_normal == 6
        assert res.false_alarms == 1
        assert res.far == pytest.approx(1.0 / 6.0)
        assert res.t_detect == 12.0
        assert res.t_onset == 10.0
        assert res.relative_delay == pytest.approx(2.0 / 1000.0)

    def test_reference_row_arithmetic(self):
        times = np.arange(1.0, 2001.0)
        labels = (times > 1000).astype(int)
        alarmed = list(np.arange(1011.0, 1933.0))  # 922 abnormal alarms
        out = synthetic_outcome(times, labels, alarmed, warmup=26)
        res = compute_metrics(out, labels, MetricsConfig())
        assert res.detected_abnormal == 922
        assert res.total_abnormal == 1000
        assert f"{100.0 * res.adr:.2f}" == "92.20"
        assert res.t_detect == 1011.0
        assert res.relative_delay == pytest.approx(0.011)

    def test_missed_detection_gets_full_duration_penalty(self):
        times = np.arange(1.0, 101.0)
        labels = (times > 60).astype(int)
        out = synthetic_outcome(times, labels, [30.0], warmup=5)  # pre-onset only
        res = compute_metrics(out, labels, MetricsConfig(t_r=1000.0))
        assert res.t_detect is None
        assert res.relative_delay == pytest.approx(100.0 / 1000.0)
        assert res.adr == 0.0

    def test_perfect_detector(self):
        times = np.arange(1.0, 41.0)
        labels = (times > 20).astype(int)
        out = synthetic_outcome(times, labels, list(times[20:]), warmup=3)
        res = compute_metrics(out, labels, MetricsConfig())
        assert res.adr == 1.0
        assert res.far == 0.0

    def test_single_segment_labelings_rejected(self):
        times = np.arange(1.0, 31.0)
        all_normal = np.zeros(30, dtype=int)
        out = synthetic_outcome(times, all_normal, [], warmup=3)
        with pytest.raises(ValueError, match="unusable scenario labeling"):
            compute_metrics(out, all_normal, MetricsConfig())
        all_abnormal = np.ones(30, dtype=int)
        out = synthetic_outcome(times, all_abnormal, [], warmup=3)
        with pytest.raises(ValueError, match="unusable scenario labeling"):
            compute_metrics(out, all_abnormal, MetricsConfig())

    def test_reference_time_must_be_positive(self):
        with pytest.raises(ValueError):
            MetricsConfig(t_r=0.0).validate()


class TestObjective:
    def test_reference_arithmetic(self):
        res = EvaluationResult(adr=0.922, far=0.002, relative_delay=0.011)
        assert objective(res) == pytest.approx(1.0976, abs=5e-5)

    def test_perfect_lower_bound(self):
        res = EvaluationResult(adr=1.0, far=0.0, relative_delay=0.0)
        assert objective(res) == 1.0

    def test_zero_detection_is_infinite_not_an_error(self):
        res = EvaluationResult(adr=0.0, far=0.0, relative_delay=0.1)
        assert math.isinf(objective(res))


def nearest_simplex_point_oracle(v):
    """Exhaustive KKT support enumeration for the 3-simplex projection."""
    best, best_d = None, np.inf
    for mask in range(1, 8):
        support = [i for i in range(3) if mask >> i & 1]
        x = np.zeros(3)
        shift = (sum(v[i] for i in support) - 1.0) / len(support)
        for i in support:
            x[i] = v[i] - shift
        if (x < -1e-12).any():
            continue
        d = float(((x - v) ** 2).sum())
        if d < best_d - 1e-15:
            best, best_d = np.clip(x, 0.0, None), d
    return best


class TestSimplexProjection:
    def test_feasible_points_unchanged(self):
        for v in ([0.2, 0.3, 0.5], [1.0, 0.0, 0.0], [1 / 3] * 3):
            out = simplex_project(np.array(v))
            np.testing.assert_allclose(out, v, atol=1e-12)

    def test_matches_enumeration_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            v = rng.normal(0.4, 1.0, 3)
            got = simplex_project(v)
            want = nearest_simplex_point_oracle(v)
            assert got.sum() == pytest.approx(1.0, abs=1e-9)
            assert (got >= 0.0).all()
            np.testing.assert_allclose(got, want, atol=1e-9)

    def test_idempotent(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            p = simplex_project(rng.normal(0.0, 2.0, 3))
            np.testing.assert_allclose(simplex_project(p), p, atol=1e-12)


class TestFitnessEvaluator:
    def test_deterministic_and_cached(self, tiny_scenarios):
        ev = FitnessEvaluator(tiny_scenarios,
                              base=DetectorParams(train_len=60))
        a = ev.evaluate(15, (0.3, 0.4, 0.3))
        b = ev.evaluate(15, (0.3, 0.4, 0.3))
        assert a == b
        ev.evaluate(15, (0.5, 0.25, 0.25))
        # one stream set per scenario, reused across weight vectors
        assert sum(1 for (_, w) in ev._streams if w == 15) == 3

    def test_pooled_counts_match_per_scenario_metrics(self, tiny_scenarios):
        ev = FitnessEvaluator(tiny_scenarios,
                              base=DetectorParams(train_len=60))
        pooled = ev.evaluate(15, (0.3, 0.4, 0.3))
        da = ta = f = tn = 0
        delays = []
        for tele in tiny_scenarios:
            rep = ev.detector_report(tele, 15, (0.3, 0.4, 0.3))
            labels = tele.labels
            post = rep.outcome.alarms & (labels == 1)
            da += int(post.sum())
            ta += int((labels == 1).sum())
            normal = (labels == 0) & ~np.isnan(rep.h_stream)
            f += int((rep.outcome.alarms & normal).sum())
            tn += int(normal.sum())
            if (labels == 1).any():
                res = compute_metrics(rep.outcome, labels, ev.metrics)
                delays.append(res.relative_delay)
        assert pooled.detected_abnormal == da
        assert pooled.total_abnormal == ta
        assert pooled.false_alarms == f
        assert pooled.total_normal == tn
        assert pooled.relative_delay == pytest.approx(np.mean(delays))

    def test_window_exceeding_training_prefix_is_infeasible(self, tiny_scenarios):
        ev = FitnessEvaluator(tiny_scenarios,
                              base=DetectorParams(train_len=60))
        res = ev.evaluate(90, (0.3, 0.4, 0.3))
        assert math.isinf(objective(res))

    def test_needs_a_fault_scenario(self, tiny_scenarios):
        with pytest.raises(ValueError):
            FitnessEvaluator([tiny_scenarios[2]],
                             base=DetectorParams(train_len=60))


class TestGaConfig:
    def test_bounds(self):
        with pytest.raises(ValueError):
            GaConfig(population=3).validate()
        with pytest.raises(ValueError):
            GaConfig(population=8, elite=8).validate()
        GaConfig().validate()


@pytest.fixture(scope="module")
def ga_setup(tiny_scenarios):
    ev = FitnessEvaluator(tiny_scenarios, base=DetectorParams(train_len=60))
    ga = GaConfig(population=8, generations=5, elite=2, immigrants=1,
                  w_min=5, w_max=40, rng_seed=11)
    return ev, ga


class TestMgaOptimize:
    def test_returns_feasible_params(self, tiny_scenarios, ga_setup):
        ev, ga = ga_setup
        log = []
        params = mga_optimize(tiny_scenarios, ev, ga, log=log)
        alpha = np.asarray(params.alpha)
        assert abs(alpha.sum() - 1.0) <= 1e-9
        assert (alpha >= 0.0).all()
        assert isinstance(params.window, int)
        assert 5 <= params.window <= 40
        assert len(log) == 5

    def test_deterministic(self, tiny_scenarios, ga_setup):
        ev, ga = ga_setup
        log_a, log_b = [], []
        pa = mga_optimize(tiny_scenarios, ev, ga, log=log_a)
        pb = mga_optimize(tiny_scenarios, ev, ga, log=log_b)
        assert pa.window == pb.window
        assert pa.alpha == pb.alpha
        assert log_a == log_b

    def test_elitism_monotone_and_log_shape(self, tiny_scenarios, ga_setup):
        ev, ga = ga_setup
        log = []
        mga_optimize(tiny_scenarios, ev, ga, log=log)
        best = [float(line.split(",")[1]) for line in log]
        assert all(b2 <= b1 + 1e-12 for b1, b2 in zip(best, best[1:]))
        for line in log:
            fields = line.split(",")
            assert len(fields) == 7  # gen, best, mean, W, a1, a2, a3

    def test_every_candidate_feasible_before_evaluation(self, tiny_scenarios,
                                                        ga_setup):
        ev, ga = ga_setup
        seen = []
        real = ev.evaluate

        def spy(window, alpha):
            seen.append((window, tuple(alpha)))
            return real(window, alpha)

        ev_spy = FitnessEvaluator(tiny_scenarios,
                                  base=DetectorParams(train_len=60))
        ev_spy.evaluate = spy
        mga_optimize(tiny_scenarios, ev_spy, ga)
        assert seen
        for w, alpha in seen:
            assert isinstance(w, int) and 5 <= w <= 40
            a = np.asarray(alpha)
            assert abs(a.sum() - 1.0) <= 1e-9
            assert (a >= -1e-12).all()

    def test_all_infeasible_falls_back_to_defaults(self, tiny_scenarios):
        ev = FitnessEvaluator(tiny_scenarios,
                              base=DetectorParams(train_len=60))
        ev.evaluate = lambda w, a: EvaluationResult(adr=0.0, far=0.0,
                                                    relative_delay=1.0)
        ga = GaConfig(population=6, generations=2, elite=1, w_min=5, w_max=40,
                      rng_seed=3)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            params = mga_optimize(tiny_scenarios, ev, ga)
        assert any("no feasible" in str(w.message) for w in caught)
        assert params.window == 27
        assert params.alpha == DetectorParams().alpha

    def test_beats_its_own_initial_population(self, tiny_scenarios, ga_setup):
        ev, ga = ga_setup
        log = []
        mga_optimize(tiny_scenarios, ev, ga, log=log)
        first_best = float(log[0].split(",")[1])
        last_best = float(log[-1].split(",")[1])
        assert last_best <= first_best
