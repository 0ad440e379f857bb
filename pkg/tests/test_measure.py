import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pdsim.measure import DomainError, FiniteMeasure, PointMass, PushforwardMeasure, UniformLaw, integrate, mean, sample
from pdsim.observables import Above, Identity, Indicator, PiecewiseLinear, Square
from pdsim.rng import StreamKey


def test_integrate_fair_coin_indicator():
    assert integrate(FiniteMeasure([0, 1], [0.5, 0.5]), Indicator(1)) == 0.5


def test_integrate_point_mass():
    assert integrate(PointMass(1), Indicator(1)) == 1.0


def test_integrate_identity_against_loop():
    m = FiniteMeasure([-1, 1], [0.3, 0.7])
    brute = 0.0
    for s, w in zip(m.support, m.weights):
        brute += w * s
    assert integrate(m, Identity()) == pytest.approx(0.4, abs=1e-15)
    assert integrate(m, Identity()) == pytest.approx(brute, abs=1e-15)


def test_undefined_observable_is_domain_error():
    m = FiniteMeasure(["a", "b"], [0.5, 0.5])
    with pytest.raises(DomainError):
        integrate(m, {"a": 1.0}.__getitem__)
    with pytest.raises(DomainError):
        mean(m)


@pytest.mark.parametrize(
    "m, expected",
    [
        (FiniteMeasure([0, 1], [0.5, 0.5]), 0.5),
        (PointMass(1), 1.0),
        (FiniteMeasure([0, 1], [0.25, 0.75]), 0.75),
    ],
)
def test_mean(m, expected):
    assert mean(m) == expected


@pytest.mark.parametrize(
    "support, weights",
    [
        ([0, 1], [0.5, 0.6]),
        ([0, 1], [1.2, -0.2]),
        ([0, 0], [0.5, 0.5]),
        ([0, 1], [0.5]),
        ([0, 1], [0.5, 0.5 - 1e-11]),
    ],
)
def test_construction_rejects(support, weights):
    with pytest.raises(ValueError):
        FiniteMeasure(support, weights)


def test_construction_tolerance_boundary():
    FiniteMeasure([0, 1], [0.5, 0.5 + 5e-13])


def test_sample_degenerate():
    key = StreamKey(3)
    assert sample(PointMass(1), key.stream()) == 1
    m = FiniteMeasure([0, 1], [0.0, 1.0])
    s = key.stream()
    assert all(sample(m, s) == 1 for _ in range(200))


def test_sample_fair_coin_frequency():
    m = FiniteMeasure([0, 1], [0.5, 0.5])
    u = StreamKey(31).stream().uniforms(1_000_000)
    draws = np.array([m.index_for(x) for x in u[:2000]])
    # vectorized inverse CDF for the full million, checked against bisect on a prefix
    full = (u >= m._cumulative[0]).astype(int)
    assert np.array_equal(full[:2000], draws)
    assert abs(full.mean() - 0.5) <= 3 * 0.5 / 1000


def test_sample_frequencies_sup_norm():
    m = FiniteMeasure(["a", "b", "c", "d"], [0.1, 0.2, 0.3, 0.4])
    for seed in (1, 2, 3):
        for n in (10_000, 40_000):
            s = StreamKey(seed).stream()
            counts = {k: 0 for k in m.support}
            for x in s.uniforms(n):
                counts[m.support[m.index_for(x)]] += 1
            gap = max(abs(counts[k] / n - w) for k, w in zip(m.support, m.weights))
            assert gap <= 4 * math.sqrt(math.log(n) / n)


weights_strategy = st.lists(st.floats(0.0, 1.0), min_size=1, max_size=6).filter(lambda w: sum(w) > 0.1)


def _measure(raw):
    total = math.fsum(raw)
    w = [x / total for x in raw]
    w[-1] = 1.0 - math.fsum(w[:-1])
    if w[-1] < 0:
        w[-1] = 0.0
    return FiniteMeasure(list(range(len(w))), w)


@settings(max_examples=100, deadline=None)
@given(weights_strategy, st.floats(-10, 10))
def test_integrate_constant(raw, c):
    m = _measure(raw)
    assert integrate(m, lambda x: c) == pytest.approx(c, abs=1e-12 * max(1.0, abs(c)))


@settings(max_examples=100, deadline=None)
@given(weights_strategy, st.floats(-5, 5), st.floats(-5, 5))
def test_integrate_linear(raw, a, b):
    m = _measure(raw)
    f = lambda x: math.sin(x)
    g = lambda x: x * x - 1
    lhs = integrate(m, lambda x: a * f(x) + b * g(x))
    rhs = a * integrate(m, f) + b * integrate(m, g)
    assert lhs == pytest.approx(rhs, abs=1e-12 * 50)


def test_pushforward_interval_mass():
    law = UniformLaw(1.0)
    m = PushforwardMeasure(law, 2.0)
    # Z uniform on [-1, 1] scaled by 2: uniform on [-2, 2]
    assert m.interval_mass(0.0, 1.0) == pytest.approx(0.25, abs=1e-15)
    assert m.interval_mass(-5.0, 5.0) == 1.0
    assert m.interval_mass(1.0, 0.0) == 0.0
    # mass of [lo, hi] equals base mass of [lo/scale, hi/scale]
    for lo, hi in [(-0.3, 0.9), (0.5, 1.7), (-2.5, -1.0)]:
        base = float(law.cdf(hi / 2.0) - law.cdf(lo / 2.0))
        assert m.interval_mass(lo, hi) == pytest.approx(base, abs=1e-15)


def test_pushforward_expectations_by_quadrature():
    m = PushforwardMeasure(UniformLaw(1.0), 1.5)
    # E (1.5 Z)^2 = 2.25 / 3
    assert m.integrate(Square()) == pytest.approx(0.75, rel=1e-13)
    assert m.integrate(Identity()) == pytest.approx(0.0, abs=1e-14)
    assert m.integrate(Above(0.0)) == pytest.approx(0.5, abs=1e-14)
    assert m.integrate(Above(0.75)) == pytest.approx(0.25, abs=1e-14)
    pl = PiecewiseLinear([-1.0, 0.0, 1.0], [0.0, 1.0, 0.0])
    # tent on [-1, 1] against uniform on [-1.5, 1.5]: area 1 over width 3
    assert m.integrate(pl) == pytest.approx(1.0 / 3.0, rel=1e-13)


def test_pushforward_sample_range():
    m = PushforwardMeasure(UniformLaw(1.0), 0.5)
    s = StreamKey(4).stream()
    xs = [m.sample(s) for _ in range(1000)]
    assert max(abs(x) for x in xs) <= 0.5
