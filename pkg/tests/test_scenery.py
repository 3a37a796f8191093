import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rwrslab.sampling import SeedSpec, StableParams
from rwrslab.scenery import (
    BLOCK,
    BrownianNoise,
    CumulativeScenery,
    FbmNoise,
    IidStable,
    MovingAverage,
    PowerDecay,
    RandomMeasure,
    Scenery,
    Summable,
    calibration_length,
    cumulative_variance,
    generate_scenery,
    innovation_weights,
    integrate,
    kernel_coefficients,
    limit_inner_product,
    limit_model,
    normalization,
    rescaled_cumulative,
    scaling_check,
)
from rwrslab.stepfn import StepFunction

from conftest import FixedScenery

GAUSS = IidStable(StableParams(2.0))
SPECS = [
    GAUSS,
    IidStable(StableParams(1.4, 0.7, 0.3)),
    MovingAverage(Summable((0.5, 1.0, -0.25), first_lag=-1)),
    MovingAverage(PowerDecay(0.75, radius=300)),
]


def geometric_kernel(radius):
    return Summable(tuple(2.0 ** -abs(k) for k in range(-radius, radius + 1)), first_lag=-radius)


@st.composite
def lattice_steps(draw, unit):
    k = draw(st.integers(1, 5))
    cuts = sorted(draw(st.lists(st.integers(-60, 60), min_size=k + 1, max_size=k + 1, unique=True)))
    vals = draw(st.lists(st.floats(-3, 3, allow_subnormal=False), min_size=k, max_size=k))
    return StepFunction(np.array(cuts) * unit, np.array(vals))


# -- specs and generation ---------------------------------------------------


@pytest.mark.parametrize("gamma", [0.5, 1.0, 0.3, 1.2])
def test_power_decay_gamma_guard(gamma):
    with pytest.raises(ValueError, match=r"\(1/2, 1\)"):
        PowerDecay(gamma)


def test_power_decay_amplitude_guard():
    with pytest.raises(ValueError):
        PowerDecay(0.75, p1=0.0)


def test_power_decay_hurst():
    assert PowerDecay(0.75).hurst == 0.75
    assert PowerDecay(0.6).hurst == pytest.approx(0.9)


def test_iid_index_guard():
    with pytest.raises(ValueError, match=r"\(1, 2\]"):
        IidStable(StableParams(0.9))


def test_power_decay_kernel_shape():
    first, c = kernel_coefficients(PowerDecay(0.75, p1=2.0, p2=-1.0, radius=10))
    assert first == -10 and len(c) == 21
    assert c[10] == 2.0
    assert c[11] == pytest.approx(2.0) and c[12] == pytest.approx(2.0 * 2**-0.75)
    assert c[9] == pytest.approx(-1.0) and c[0] == pytest.approx(-(10**-0.75))


def test_identity_kernel_returns_innovations():
    sc = Scenery(MovingAverage(Summable((1.0,))), SeedSpec(3))
    assert np.array_equal(sc.values(-50, 5000), sc.innovations(-50, 5000))


@pytest.mark.parametrize("spec", SPECS[2:])
def test_moving_average_matches_direct_sum(spec):
    sc = Scenery(spec, SeedSpec(4))
    first, c = kernel_coefficients(spec.kernel)
    lags = first + np.arange(len(c))
    for x in (-BLOCK - 1, -1, 0, 17, BLOCK, 3 * BLOCK + 5):
        direct = sum(ck * sc.innovations(x - k, x - k)[0] for ck, k in zip(c, lags))
        assert sc.values(x, x)[0] == pytest.approx(direct, rel=1e-10, abs=1e-12)


@pytest.mark.parametrize("spec", SPECS)
def test_lazy_windows_agree(spec):
    a = Scenery(spec, SeedSpec(5))
    b = Scenery(spec, SeedSpec(5))
    late = b.values(BLOCK - 10, 2 * BLOCK + 10)
    early = a.values(-BLOCK, 3 * BLOCK)
    assert np.array_equal(late, early[2 * BLOCK - 10 : 3 * BLOCK + 11])
    sites = np.array([7, -3000, 9000, 7])
    assert np.array_equal(a.take(sites), b.take(sites))


def test_scenery_seed_and_tag_separate_streams():
    base = Scenery(GAUSS, SeedSpec(6)).values(0, 10)
    assert not np.array_equal(base, Scenery(GAUSS, SeedSpec(6, 1)).values(0, 10))
    assert not np.array_equal(base, Scenery(GAUSS, SeedSpec(6), tag=1).values(0, 10))


def test_generate_scenery_window():
    sc = generate_scenery(GAUSS, (-5, 5), SeedSpec(7))
    assert sc.window.shape == (11,)
    with pytest.raises(ValueError):
        generate_scenery(GAUSS, (5, -5), SeedSpec(7))


def test_gaussian_scenery_unit_variance():
    spec = IidStable(StableParams(2.0, 2**-0.5))
    x = Scenery(spec, SeedSpec(8)).values(0, 400_000)
    assert x.var() == pytest.approx(1.0, rel=0.01)


def test_geometric_kernel_long_run_variance():
    spec = MovingAverage(geometric_kernel(20))
    n = 2**14
    w = np.array([Scenery(spec, SeedSpec(9, r)).values(0, n - 1).sum() for r in range(10_000)])
    assert w.var() / n / 9.0 == pytest.approx(1.0, rel=0.05)


# -- normalization ----------------------------------------------------------


def test_normalization_examples():
    assert normalization(GAUSS, 0.25) == pytest.approx(0.5, rel=1e-15)
    assert normalization(MovingAverage(Summable((1.0,))), 0.25) == pytest.approx(0.5, rel=1e-15)
    assert normalization(IidStable(StableParams(1.5, 2.0)), 0.125) == pytest.approx(0.125 ** (2 / 3) / 2)
    with pytest.raises(ValueError):
        normalization(GAUSS, 0.0)


def test_zero_sum_kernel_rejected():
    with pytest.raises(ValueError, match="zero sum"):
        normalization(MovingAverage(Summable((1.0, -1.0))), 0.5)


def test_cumulative_variance_brute_force():
    spec = MovingAverage(Summable((0.5, 1.0, -0.25, 2.0), first_lag=-2), innovation_std=1.5)
    first, c = kernel_coefficients(spec.kernel)
    for n in (1, 2, 5, 9):
        # w_n = sum_i (sum_{0<=x<n} c_{x-i}) eta_i
        total = 0.0
        for i in range(-10, 20):
            b = sum(c[x - i - first] for x in range(n) if 0 <= x - i - first < len(c))
            total += b * b
        assert cumulative_variance(spec, n) == pytest.approx(1.5**2 * total, rel=1e-12)


def test_power_decay_variance_slope():
    spec = MovingAverage(PowerDecay(0.75))
    ns = [2**k for k in range(10, 17)]
    slope = np.polyfit(np.log(ns), np.log([cumulative_variance(spec, n) for n in ns]), 1)[0]
    assert abs(slope - 1.5) <= 0.07


def test_power_decay_normalized_variance_near_one():
    spec = MovingAverage(PowerDecay(0.75))
    assert calibration_length(spec.kernel) == 2**15
    for k in (12, 14, 15):
        n = 2**k
        assert normalization(spec, 1 / n) ** 2 * cumulative_variance(spec, n) == pytest.approx(1.0, abs=0.05)


def test_power_decay_variance_monte_carlo():
    spec = MovingAverage(PowerDecay(0.75, radius=2000))
    n = 512
    w = np.array([Scenery(spec, SeedSpec(10, r)).values(0, n - 1).sum() for r in range(3000)])
    assert w.var() / cumulative_variance(spec, n) == pytest.approx(1.0, abs=4 * math.sqrt(2 / 3000))


def test_limit_model():
    assert isinstance(limit_model(MovingAverage(Summable((1.0,)))), BrownianNoise)
    assert limit_model(MovingAverage(PowerDecay(0.7))).hurst == pytest.approx(0.8)
    with pytest.raises(ValueError):
        limit_model(GAUSS)


# -- cumulative scenery and measures ----------------------------------------


def test_cumulative_small_cases():
    sc = FixedScenery({0: 2.0})
    w = CumulativeScenery(sc)
    assert w(0.0) == 0.0
    assert w(1.0) == 2.0
    assert w(0.5) == 1.0
    W = rescaled_cumulative(sc, 1.0)
    g = normalization(sc.spec, 1.0)
    assert W(0.0) == 0.0 and W(1.0) == pytest.approx(2 * g) and W(0.5) == pytest.approx(g)


def test_cumulative_negative_sites():
    sc = FixedScenery({-2: 1.0, -1: 3.0, 0: 5.0})
    w = CumulativeScenery(sc)
    assert w(np.array([-2.0, -1.0, 0.0, 1.0])).tolist() == [-4.0, -3.0, 0.0, 5.0]


@given(st.integers(-300, 300), st.integers(-300, 300), st.floats(0, 1, exclude_max=True))
def test_cumulative_increments(x, y, frac):
    sc = Scenery(SPECS[2], SeedSpec(11))
    w = CumulativeScenery(sc)
    lo, hi = sorted((x, y))
    assert w(float(hi)) - w(float(lo)) == pytest.approx(sc.values(lo, hi - 1).sum() if hi > lo else 0.0, abs=1e-9)
    # linear interpolation inside a unit cell
    assert w(lo + frac) == pytest.approx(w(float(lo)) + frac * sc.values(lo, lo)[0], abs=1e-9)


def test_integrate_small_case():
    sc = FixedScenery({0: 2.0, 1: -1.0})
    mu = RandomMeasure(sc, 1.0, gamma=1.0)
    assert integrate(mu, StepFunction.indicator(0, 2)) == 1.0
    assert integrate(mu, StepFunction.zero()) == 0.0
    # cell averages of a non-aligned function
    assert mu.integrate(StepFunction.indicator(0.5, 1.5, 4.0)) == pytest.approx(2.0 * 2 - 1.0 * 2)


@given(st.integers(-200, 200), st.integers(1, 300), st.sampled_from([1.0, 0.5, 0.125, 2.0**-10]))
def test_aligned_interval_identity(k1, length, h):
    sc = Scenery(SPECS[1], SeedSpec(12))
    x1, x2 = k1 * h, (k1 + length) * h
    mu = RandomMeasure(sc, h)
    W = rescaled_cumulative(sc, h)
    assert mu.integrate(StepFunction.indicator(x1, x2)) == pytest.approx(W(x2) - W(x1), rel=1e-10, abs=1e-12)


@given(lattice_steps(1 / 16), lattice_steps(1 / 8), st.floats(-2, 2), st.floats(-2, 2))
def test_measure_linearity(f, g, a, b):
    mu = RandomMeasure(Scenery(GAUSS, SeedSpec(13)), 1 / 32)
    lhs = mu.integrate(f * a + g * b)
    rhs = a * mu.integrate(f) + b * mu.integrate(g)
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9)


def test_scaling_ratio_values():
    # gamma_h / gamma_{2h} for beta = 2, sigma = 1
    assert normalization(GAUSS, 0.01) / normalization(GAUSS, 0.02) == pytest.approx(2**-0.5, rel=1e-14)


@pytest.mark.parametrize("spec", SPECS)
@settings(max_examples=25, deadline=None)
@given(f=lattice_steps(1 / 8), c=st.sampled_from([1.0, 2.0, 3.0, 0.5, 0.25]), hk=st.integers(3, 8))
def test_scaling_relation(spec, f, c, hk):
    sc = Scenery(spec, SeedSpec(14))
    lhs, rhs = scaling_check(sc, 2.0**-hk, f, c)
    assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), abs(rhs), 1.0)


def test_scaling_relation_trivial_factor():
    sc = Scenery(GAUSS, SeedSpec(15))
    lhs, rhs = scaling_check(sc, 0.1, StepFunction.indicator(0, 1), 1.0)
    assert lhs == rhs


def test_innovation_weights_match_measure():
    spec = SPECS[3]
    f = StepFunction([0.0, 0.3, 1.0], [1.0, -2.0])
    sc = Scenery(spec, SeedSpec(16))
    mu = RandomMeasure(sc, 1 / 64)
    k0, v = mu.cell_weights(f)
    i0, u = innovation_weights(spec, k0, v)
    assert float(np.dot(u, sc.innovations(i0, i0 + len(u) - 1))) == pytest.approx(mu.integrate(f), rel=1e-10)


# -- limit covariance oracle ------------------------------------------------


def fbm_cov(h, s, t):
    return 0.5 * (abs(s) ** (2 * h) + abs(t) ** (2 * h) - abs(t - s) ** (2 * h))


def fbm_rect_oracle(h, a, b, c, d):
    return fbm_cov(h, b, d) - fbm_cov(h, b, c) - fbm_cov(h, a, d) + fbm_cov(h, a, c)


def test_limit_inner_product_examples():
    one = StepFunction.indicator(0, 1)
    assert limit_inner_product(BrownianNoise(), one, one) == 1.0
    for h in (0.55, 0.75, 0.95):
        assert limit_inner_product(FbmNoise(h), one, one) == pytest.approx(1.0, rel=1e-14)
    adj = limit_inner_product(FbmNoise(0.75), one, StepFunction.indicator(1, 2))
    assert adj == pytest.approx(0.5 * (2**1.5 - 2), rel=1e-12)
    assert limit_inner_product(BrownianNoise(), one, StepFunction.zero()) == 0.0


def test_fbm_noise_guard():
    with pytest.raises(ValueError):
        FbmNoise(0.5)


@given(lattice_steps(0.25), lattice_steps(0.5), st.sampled_from([0.6, 0.75, 0.9]))
def test_fbm_inner_product_against_covariance_oracle(f, g, h):
    expected = sum(
        fv * gv * fbm_rect_oracle(h, a, b, c, d)
        for a, b, fv in zip(f.breaks[:-1], f.breaks[1:], f.values)
        for c, d, gv in zip(g.breaks[:-1], g.breaks[1:], g.values)
    )
    assert limit_inner_product(FbmNoise(h), f, g) == pytest.approx(expected, rel=1e-9, abs=1e-9)


@given(lattice_steps(0.25), lattice_steps(0.5))
def test_brownian_inner_product_overlap(f, g):
    xs = np.union1d(f.breaks, g.breaks)
    mids = (xs[:-1] + xs[1:]) / 2
    expected = float(np.sum(np.diff(xs) * f(mids) * g(mids)))
    assert limit_inner_product(BrownianNoise(), f, g) == pytest.approx(expected, abs=1e-9)


# -- statistical checks of the rescaled cumulative scenery ------------------


def test_brownian_covariance_of_rescaled_cumulative():
    spec = MovingAverage(geometric_kernel(30))
    h = 2.0**-10
    fs = [StepFunction.indicator(0, 0.5), StepFunction.indicator(0, 1)]
    probe = RandomMeasure(Scenery(spec, SeedSpec(17)), h)
    routes = [innovation_weights(spec, *probe.cell_weights(f)) for f in fs]
    vals = np.array(
        [[np.dot(u, Scenery(spec, SeedSpec(17, r)).innovations(i0, i0 + len(u) - 1)) for i0, u in routes] for r in range(10_000)]
    )
    cov = np.cov(vals.T)
    band = 4 * math.sqrt(2 / 10_000)
    assert cov[1, 1] == pytest.approx(1.0, abs=band + 0.01)
    assert cov[0, 1] == pytest.approx(0.5, abs=band + 0.01)


def test_stable_marginal_of_rescaled_cumulative():
    spec = IidStable(StableParams(1.5, 1.0, 0.5))
    h = 2.0**-14
    n = 2**14
    vals = np.array([normalization(spec, h) * Scenery(spec, SeedSpec(18, r)).values(0, n - 1).sum() for r in range(2000)])
    u = np.linspace(0.2, 2.0, 10)
    emp = np.array([np.mean(np.exp(1j * v * vals)) for v in u])
    assert np.max(np.abs(emp - StableParams(1.5, 1.0, 0.5).cf(u))) <= 3 * 4 / math.sqrt(2000)
