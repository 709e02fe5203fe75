import json
import math
from statistics import NormalDist

import numpy as np
import pytest
import scipy.special as sp
import scipy.stats as ss
from hypothesis import given, settings
from hypothesis import strategies as st

from motionfid.errors import DegenerateError, ValidationError
from motionfid.metrics import MetricReport, SourceMetrics
from motionfid.stats import (
    PairedSample,
    aggregate,
    betainc,
    emit,
    load_published_fixture,
    paired_t_test,
    shapiro_wilk,
    t_sf_two_sided,
)


def sample(a, b):
    return PairedSample(tuple(range(len(a))), np.asarray(a, float), np.asarray(b, float))


class TestSpecialFunctions:
    @pytest.mark.parametrize("a,b", [(0.5, 0.5), (2.0, 3.0), (10.5, 0.5), (150.0, 0.5), (0.7, 40.0)])
    def test_betainc_matches_oracle(self, a, b):
        for x in np.linspace(0.001, 0.999, 37):
            assert abs(betainc(a, b, x) - sp.betainc(a, b, x)) < 1e-12

    def test_betainc_limits(self):
        assert betainc(2, 3, 0.0) == 0.0 and betainc(2, 3, 1.0) == 1.0

    def test_t_tail_matches_oracle(self):
        for df in (1, 2, 5, 21, 175):
            for t in (0.0, 0.3, 1.0, 2.5, 7.0, 40.0):
                assert abs(t_sf_two_sided(t, df) - 2 * ss.t.sf(t, df)) < 1e-12

    def test_p_monotone_in_t(self):
        ps = [t_sf_two_sided(t, 9) for t in np.linspace(0, 10, 200)]
        assert all(x > y for x, y in zip(ps, ps[1:]))


class TestPairedT:
    def test_closed_form(self):
        t, p, df = paired_t_test(sample([1, 2, 3], [0, 0, 0]))
        assert abs(t - 2 * math.sqrt(3)) < 1e-12 and df == 2
        assert abs(p - ss.ttest_rel([1, 2, 3], [0, 0, 0]).pvalue) < 1e-12

    def test_zero_variance(self):
        with pytest.raises(DegenerateError):
            paired_t_test(sample([1, 2, 3], [1, 2, 3]))

    def test_sample_validation(self):
        with pytest.raises(ValidationError):
            sample([1, 2], [1, 2])
        with pytest.raises(ValidationError):
            sample([1, 2, np.nan], [1, 2, 3])
        with pytest.raises(ValidationError):
            PairedSample((1, 2, 3), np.zeros(3), np.zeros(4))

    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 10**6), n=st.integers(3, 60), c=st.floats(-100, 100))
    def test_antisymmetric_and_shift_invariant(self, seed, n, c):
        r = np.random.default_rng(seed)
        a, b = r.standard_normal(n), r.standard_normal(n)
        t, _, _ = paired_t_test(sample(a, b))
        assert paired_t_test(sample(b, a))[0] == -t
        assert abs(paired_t_test(sample(a + c, b + c))[0] - t) <= 1e-6 * max(1.0, abs(t))


class TestShapiro:
    def test_normal_quantiles(self):
        q = [NormalDist().inv_cdf((i - 0.375) / 20.25) for i in range(1, 21)]
        w, p = shapiro_wilk(q)
        assert w > 0.98
        rw, rp = ss.shapiro(q)
        assert abs(w - rw) < 1e-6 and abs(p - rp) < 1e-6

    def test_uniform_grid(self):
        w, p = shapiro_wilk(np.arange(1.0, 11.0))
        assert w > 0.9 and p > 0.05
        rw, rp = ss.shapiro(np.arange(1.0, 11.0))
        assert abs(w - rw) < 1e-6 and abs(p - rp) < 1e-6

    def test_outlier(self):
        q = [NormalDist().inv_cdf((i - 0.375) / 20.25) for i in range(1, 21)] + [100.0]
        w, p = shapiro_wilk(q)
        assert p < 0.01
        assert abs(p - ss.shapiro(q).pvalue) < 1e-6

    @pytest.mark.parametrize("n", [3, 4, 5, 6, 7, 11, 12, 13, 50, 200, 1000])
    def test_matches_oracle_across_branches(self, n):
        r = np.random.default_rng(n)
        for x in (r.standard_normal(n), r.exponential(size=n), r.uniform(size=n)):
            w, p = shapiro_wilk(x)
            rw, rp = ss.shapiro(x)
            assert abs(w - rw) < 1e-6
            assert abs(p - rp) < 1e-5

    def test_order_independent(self, rng):
        x = rng.standard_normal(25)
        assert shapiro_wilk(x) == shapiro_wilk(x[::-1])

    def test_range_errors(self):
        with pytest.raises(ValidationError):
            shapiro_wilk([1.0, 2.0])
        with pytest.raises(ValidationError):
            shapiro_wilk(np.zeros(5001) + np.arange(5001))
        with pytest.raises(DegenerateError):
            shapiro_wilk([2.0, 2.0, 2.0, 2.0])


def _report(task, a, b, metric="mpjpe"):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return MetricReport(task, {
        "simulated": SourceMetrics({metric: float(a.mean())}, {metric: a}),
        "benchmark": SourceMetrics({metric: float(b.mean())}, {metric: b}),
    })


class TestAggregate:
    def test_pairs_over_task_and_joint(self, rng):
        reps = [_report(f"t{i}", rng.uniform(size=22), rng.uniform(size=22)) for i in range(3)]
        agg = aggregate(reps)
        st_ = agg.stats["mpjpe"]
        assert st_.n == 66 and st_.df == 65
        a = np.concatenate([r.sources["simulated"].per_joint["mpjpe"] for r in reps])
        b = np.concatenate([r.sources["benchmark"].per_joint["mpjpe"] for r in reps])
        assert abs(st_.mean_a - a.mean()) < 1e-12 and abs(st_.mean_b - b.mean()) < 1e-12
        ref = ss.ttest_rel(a, b)
        assert abs(st_.t_statistic - ref.statistic) < 1e-9 and abs(st_.p_value - ref.pvalue) < 1e-9

    def test_duplicate_reports_collapse(self, rng):
        r = _report("t", rng.uniform(size=22), rng.uniform(size=22))
        one, two = aggregate([r]), aggregate([r, r])
        assert emit(one, "summary") == emit(two, "summary")

    def test_conflicting_duplicates(self, rng):
        a = _report("t", rng.uniform(size=22), rng.uniform(size=22))
        b = _report("t", rng.uniform(size=22), rng.uniform(size=22))
        with pytest.raises(ValidationError, match="conflicting"):
            aggregate([a, b])

    def test_degenerate_metric_reported_not_raised(self, rng):
        x = rng.uniform(size=22)
        agg = aggregate([_report("t", x, x)])
        st_ = agg.stats["mpjpe"]
        assert st_.t_statistic is None and any("zero variance" in e for e in st_.errors)

    def test_empty(self):
        with pytest.raises(ValidationError):
            aggregate([])

    def test_joint_mean_pairing(self, rng):
        reps = [_report(f"t{i}", rng.uniform(size=22), rng.uniform(size=22)) for i in range(4)]
        agg = aggregate(reps, pairing="joint_mean")
        assert agg.stats["mpjpe"].n == 22

    def test_emit_formats(self, rng):
        reps = [_report(f"t{i}", rng.uniform(size=22), rng.uniform(size=22)) for i in range(2)]
        agg = aggregate(reps, provenance=["a", "b"])
        doc = json.loads(emit(agg, "json", {"pairing": "task_joint"}))
        assert doc["statistics"]["mpjpe"]["n"] == 44 and len(doc["tasks"]) == 2
        assert emit(agg, "by_task").decode().splitlines()[0] == "metric,source,t0,t1"
        rows = emit(agg, "by_joint").decode().splitlines()
        assert len(rows) == 23 and rows[0] == "joint,MPJPE:simulated,MPJPE:benchmark"
        assert len(emit(agg, "plot").decode().splitlines()) == 1 + 2 * 2 * 22
        with pytest.raises(ValidationError):
            emit(agg, "xml")

    def test_emit_deterministic(self, rng):
        reps = [_report("t", rng.uniform(size=22), rng.uniform(size=22))]
        assert emit(aggregate(reps), "json") == emit(aggregate(reps), "json")


def test_fixture_shape():
    rows = load_published_fixture()
    assert len(rows) == 22 * 2 * 3
    assert {r[0] for r in rows} == {"avg"}
    head = [r for r in rows if r[1] == 16 and r[2] in ("MPJPE", "DTW")]
    assert all(r[4] == 0.0 for r in head)
