import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from dprem import stats_tests as stt
from dprem.errors import SampleSizeError


def test_ks_examples():
    assert stt.ks_statistic([0.0], stats.norm.cdf) == 0.5
    n = 50
    q = np.arange(1, n + 1) / (n + 1)
    assert stt.ks_statistic(q, lambda x: x) < 1 / n + 1 / (n + 1)
    u = np.random.default_rng(1).uniform(size=10**4)
    assert stt.ks_statistic(u, lambda x: np.clip(x, 0, 1)) < 0.027


def test_ks_matches_scipy():
    x = np.random.default_rng(2).exponential(size=500)
    assert stt.ks_statistic(x, stats.expon.cdf) == pytest.approx(stats.kstest(x, "expon").statistic, abs=1e-15)


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=50))
def test_ks_monotone_invariance(xs):
    a = stt.ks_statistic(xs, stats.norm.cdf)
    b = stt.ks_statistic(np.exp(np.asarray(xs)), lambda y: stats.norm.cdf(np.log(y)))
    assert a == pytest.approx(b, abs=1e-12)


def test_ks_empty():
    with pytest.raises(ValueError):
        stt.ks_statistic([], stats.norm.cdf)


def test_poisson_gof_examples():
    rng = np.random.default_rng(3)
    assert stt.poisson_gof(rng.poisson(1.0, 2000), 1.0).passed
    assert not stt.poisson_gof(np.zeros(1000, dtype=int), 1.0).passed
    v = stt.poisson_gof(np.zeros(200, dtype=int), 0.0)
    assert v.passed and v.details["degenerate"]
    with pytest.raises(SampleSizeError):
        stt.poisson_gof([1] * 99, 1.0)


@pytest.mark.parametrize("b", [0.1, 0.5, 1.0, 2.0, 7.0])
def test_poisson_cells(b):
    v = stt.poisson_gof(np.random.default_rng(4).poisson(b, 1000), b)
    if isinstance(v.details.get("cells"), list):
        assert min(v.details["expected"]) >= 5
        assert sum(v.details["expected"]) == pytest.approx(1000)
        assert v.details["cells"][0][0] == 0 and v.details["cells"][-1][1] is None
    assert {"mean", "mean_se", "variance", "variance_se"} <= set(v.details)


def test_poisson_gof_rate():
    rng = np.random.default_rng(5)
    passes = sum(stt.poisson_gof(rng.poisson(1.0, 2000), 1.0, 0.01).passed for _ in range(200))
    assert passes >= 0.97 * 200


def test_gamma_examples():
    rng = np.random.default_rng(6)
    assert stt.gamma_order_stat_test(rng.exponential(size=1000), 1).passed
    assert not stt.gamma_order_stat_test(np.zeros(1000), 1).passed
    assert stt.gamma_order_stat_test(rng.exponential(size=(1000, 2)).sum(axis=1), 2).passed
    assert stt.ks_critical(1000) == pytest.approx(0.0430, abs=1e-4)
    with pytest.raises(SampleSizeError):
        stt.gamma_order_stat_test([np.nan] * 200, 1)
    with pytest.raises(SampleSizeError):
        stt.gamma_order_stat_test([1.0] * 50, 1)


def test_gamma_rate():
    # nominal rate 0.95; 2000 meta-trials put the 0.94 floor two binomial sd below it
    trials = 2000
    rng = np.random.default_rng(7)
    passes = sum(stt.gamma_order_stat_test(rng.exponential(size=1000), 1).passed for _ in range(trials))
    assert passes >= 0.94 * trials


def test_threshold_is_configured_not_computed():
    x = np.random.default_rng(8).exponential(size=400)
    a = stt.gamma_order_stat_test(x, 1)
    b = stt.gamma_order_stat_test(x, 1, factor=1.5)
    assert a.statistic == b.statistic and b.threshold == pytest.approx(1.5 * a.threshold)


def test_verdict_pass_flag_consistent():
    v = stt.mean_count_check([1] * 100, 1.0)
    assert v.passed == (v.statistic <= v.threshold)
    v = stt.frequency_check("f", 3, 100, 0.02)
    assert not v.passed and v.statistic == 0.03
    assert stt.nonincreasing_trend("t", [1, 2, 3], [3, 2, 2]).passed
    assert not stt.nonincreasing_trend("t", [1, 2, 3], [3, 2, 2.5]).passed
    assert set(v.to_dict()) == {"name", "statistic", "threshold", "passed", "sample_size", "details"}


def test_binomial_band():
    lo, hi = stt.binomial_band(200, 0.95)
    assert lo == pytest.approx(190 - 3 * math.sqrt(9.5))
    assert hi == pytest.approx(190 + 3 * math.sqrt(9.5))


def test_selftest_small():
    out = stt.selftest(meta_trials=40, seed=1)
    assert len(out) == 6
    assert all(v.sample_size == 40 for v in out)
