import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from rwrslab.stats import empirical_cf, fit_power_law, iqr, ks_critical_value, ks_statistic, ks_two_sample

samples = st.lists(st.floats(-100, 100, allow_nan=False), min_size=1, max_size=50)


def test_ks_identical_and_disjoint():
    x = np.arange(10.0)
    assert ks_statistic(x, x) == 0.0
    assert ks_statistic(x, x + 100) == 1.0


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
@given(samples, samples)
def test_ks_matches_scipy(x, y):
    assert ks_statistic(x, y) == pytest.approx(stats.ks_2samp(x, y, method="asymp").statistic, abs=1e-12)


def test_ks_critical_value_formula():
    c = math.sqrt(-0.5 * math.log(0.005))
    assert ks_critical_value(2000, 2000, 0.01) == pytest.approx(c * math.sqrt(2 / 2000))
    assert c == pytest.approx(1.6276, abs=1e-4)


def test_ks_result_verdict():
    res = ks_two_sample(np.arange(100.0), np.arange(100.0) + 0.5)
    assert res.passed and res.level == 0.01
    assert not ks_two_sample(np.zeros(100), np.ones(100)).passed


def test_iqr():
    assert iqr(np.arange(101.0)) == 50.0


@given(st.floats(-2, 2), st.floats(0.1, 10), st.lists(st.floats(1, 1e6), min_size=2, max_size=8, unique=True))
def test_power_law_exact(exponent, scale, xs):
    xs = np.array(xs)
    if np.ptp(np.log(xs)) < 1e-3:
        return
    fit = fit_power_law(xs, scale * xs**exponent)
    assert fit.exponent == pytest.approx(exponent, abs=1e-6)
    assert fit.intercept == pytest.approx(math.log(scale), abs=1e-5)


def test_power_law_guards():
    with pytest.raises(ValueError):
        fit_power_law([1.0], [1.0])
    with pytest.raises(ValueError):
        fit_power_law([1.0, 2.0], [0.0, 1.0])
    with pytest.raises(ValueError):
        fit_power_law([2.0, 2.0], [1.0, 3.0])
    assert math.isnan(fit_power_law([1.0, 2.0], [1.0, 3.0]).stderr)


def test_power_law_stderr_matches_scipy():
    x = np.array([1.0, 2.0, 4.0, 8.0, 16.0])
    y = np.array([1.1, 1.9, 4.3, 7.5, 16.8])
    ref = stats.linregress(np.log(x), np.log(y))
    fit = fit_power_law(x, y)
    assert fit.exponent == pytest.approx(ref.slope)
    assert fit.stderr == pytest.approx(ref.stderr)


def test_empirical_cf():
    cf = empirical_cf([0.0, math.pi], [1.0])
    assert cf[0] == pytest.approx(0.0)
