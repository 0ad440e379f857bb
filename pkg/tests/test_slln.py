import csv
import io
import math

import numpy as np
import pytest

from pdsim.models import (
    Canonical,
    ExchangeableBernoulli,
    IidUniformBernoulli,
    RandomWalk,
    RegimeParams,
    RegimeSwitching,
    StochasticVolatility,
    SubmartingaleCoin,
    SVParams,
)
from pdsim.observables import Above, Constant, Identity, Indicator, Square
from pdsim.oracle import regime_ergodic_limit
from pdsim.rng import ForcedStream, StreamKey
from pdsim.slln import (
    DEFAULT_CHECKPOINTS,
    Checkpoint,
    CheckpointError,
    ConvergenceTrace,
    gap_decay_check,
    prefix_sums,
    run_trace,
    run_traces,
    stabilization,
    submartingale_estimates,
    submartingale_limit_estimate,
    sv_functional_estimate,
    trace_from_paths,
    traces_from_batch,
    traces_to_csv,
)

CPS = (10, 100, 1000, 10_000)


@pytest.mark.parametrize(
    "base",
    [IidUniformBernoulli(), ExchangeableBernoulli("uniform"), SubmartingaleCoin(), StochasticVolatility()],
    ids=lambda m: m.model_id,
)
def test_canonical_gap_is_zero(base):
    for f in (Indicator(1), Identity()):
        trace = run_trace(Canonical(base), f, 10_000, CPS, StreamKey(3))
        assert all(c.gap == 0.0 for c in trace.checkpoints)
    latent, observed = Canonical(base).sample_path(500, StreamKey(4))
    t = trace_from_paths(latent, observed, Identity(), [5, 50, 500])
    assert all(c.gap == 0.0 for c in t.checkpoints)


def test_trace_recomputable_and_gap_identity():
    model = RegimeSwitching(RegimeParams(0.7, 0.3, ((0.9, 0.1), (0.2, 0.8))))
    trace = run_trace(model, Identity(), 100_000, DEFAULT_CHECKPOINTS, StreamKey(8, 2))
    for c in trace.checkpoints:
        assert c.mean_fX == pytest.approx(math.fsum(trace.f_values[: c.n]) / c.n, abs=1e-12)
        assert c.gap == c.mean_fX - c.mean_xif
        direct = math.fsum(trace.f_values[: c.n] - trace.xi_values[: c.n])
        assert c.gap * c.n == pytest.approx(direct, abs=1e-12 * c.n)


def test_prefix_sums_exact():
    values = np.array([1e16, 1.0, -1e16, 1.0] * 3)
    assert prefix_sums(values, [2, 4, 12]) == [1e16, 2.0, 6.0]


def test_single_path_trace_matches_bulk():
    model = SubmartingaleCoin()
    key = StreamKey(91, 4)
    a = run_trace(model, Indicator(1), 1000, [10, 100, 1000], key)
    latent, observed = model.sample_path(1000, key)
    b = trace_from_paths(latent, observed, Indicator(1), [10, 100, 1000], key)
    assert a.checkpoints == b.checkpoints


def test_exchangeable_terminal_means_spread_like_theta():
    traces = run_traces(ExchangeableBernoulli("uniform"), Indicator(1), 100_000, DEFAULT_CHECKPOINTS, 555, 100)
    terminal = np.array([t.terminal.mean_fX for t in traces])
    # sample variance of 100 uniforms: sd sqrt((1/80 - 1/144) / 100)
    sigma = math.sqrt((1 / 80 - 1 / 144) / 100)
    assert abs(terminal.var(ddof=1) - 1 / 12) <= 3 * sigma
    assert terminal.var(ddof=1) > 0.05
    assert gap_decay_check(traces).passed


def test_regime_terminal_mean_near_limit():
    params = RegimeParams(0.7, 0.3, ((0.9, 0.1), (0.2, 0.8)))
    trace = run_trace(RegimeSwitching(params), Indicator(1), 100_000, DEFAULT_CHECKPOINTS, StreamKey(17))
    assert abs(trace.terminal.mean_fX - regime_ergodic_limit(params, Indicator(1))) <= 0.02


def test_gap_decay_iid_passes():
    traces = run_traces(IidUniformBernoulli(), Indicator(1), 100_000, DEFAULT_CHECKPOINTS, 2718, 50)
    report = gap_decay_check(traces, gamma=0.5, floor=1e-3)
    assert report.passed, report.failures
    assert report.decades == list(DEFAULT_CHECKPOINTS)


def test_gap_decay_canonical_passes():
    traces = run_traces(Canonical(IidUniformBernoulli()), Identity(), 1000, (10, 100, 1000), 1, 5)
    report = gap_decay_check(traces)
    assert report.passed and report.median_abs_gap == [0.0, 0.0, 0.0]


def _injected(gap, reps=50):
    return [
        ConvergenceTrace([Checkpoint(n, 0.5 + gap, 0.5, gap) for n in DEFAULT_CHECKPOINTS], "fake", StreamKey(0, r), "indicator")
        for r in range(reps)
    ]


def test_gap_decay_rejects_constant_gap():
    report = gap_decay_check(_injected(0.1))
    assert not report.passed
    assert len(report.failures) == 3


def test_gap_decay_needs_three_decades():
    traces = run_traces(IidUniformBernoulli(), Indicator(1), 1000, (100, 500, 1000), 1, 5)
    with pytest.raises(CheckpointError):
        gap_decay_check(traces)


def test_trace_errors():
    with pytest.raises(ValueError):
        run_trace(IidUniformBernoulli(), Indicator(1), 0, [1], StreamKey(1))
    with pytest.raises(ValueError):
        run_trace(IidUniformBernoulli(), Indicator(1), 100, [100, 10], StreamKey(1))
    with pytest.raises(ValueError):
        run_trace(IidUniformBernoulli(), Indicator(1), 100, [1000], StreamKey(1))


def test_submartingale_forced_estimates():
    model = SubmartingaleCoin()
    latent = model.sample_latent(20, ForcedStream(0.0))
    observed = model.sample_observed(latent, ForcedStream(0.0))
    trace = trace_from_paths(latent, observed, Indicator(1), [20])
    assert submartingale_limit_estimate(trace, latent) == (0.0, 0.0)

    latent = model.sample_latent(21, ForcedStream(1.0))
    observed = model.sample_observed(latent, ForcedStream(1.0))
    trace = trace_from_paths(latent, observed, Indicator(1), [21])
    assert submartingale_limit_estimate(trace, latent) == (1.0 - 2.0**-21, 1.0)


def test_submartingale_estimate_rejects_other_models():
    trace = run_trace(IidUniformBernoulli(), Indicator(1), 10, [10], StreamKey(1))
    with pytest.raises(ValueError):
        submartingale_limit_estimate(trace, 0.5)


def test_submartingale_limit_tracking():
    pairs = submartingale_estimates(seed=404, horizon=100_000, replications=100)
    # Hoeffding 3 sqrt(1/(4N)) ~ 0.0047 plus early drift well under 0.02
    close = sum(abs(theta - mean) <= 0.02 for theta, mean in pairs)
    assert close >= 95


def test_sv_constant_observable():
    est = sv_functional_estimate(SVParams(), Constant(1.0), 1000, StreamKey(1), 5, direct_draws=2000)
    assert est.path_average == 1.0
    assert est.direct == pytest.approx(1.0, abs=1e-12)


def test_sv_identity_centered():
    est = sv_functional_estimate(SVParams(), Identity(), 10_000, StreamKey(2), 20, direct_draws=20_000)
    assert abs(est.path_average) <= 3 * est.path_average_se
    assert est.direct == pytest.approx(0.0, abs=1e-12)


def test_sv_square_agreement():
    est = sv_functional_estimate(SVParams(), Square(), 10_000, StreamKey(3), 40)
    assert est.agree(3.0), est


@pytest.mark.slow
@pytest.mark.parametrize(
    "model",
    [
        IidUniformBernoulli(),
        RandomWalk(),
        ExchangeableBernoulli("uniform"),
        RegimeSwitching(RegimeParams(0.7, 0.3, ((0.9, 0.1), (0.2, 0.8)))),
        SubmartingaleCoin(),
        StochasticVolatility(),
    ],
    ids=lambda m: m.model_id,
)
def test_stabilization_agrees_when_gap_decays(model):
    # convergence-equivalence proxy: with the gap decaying, the two running
    # means are judged stabilized together (compared at 10^5 vs 10^6)
    cps = (1_000, 10_000, 100_000, 1_000_000)
    batch = model.simulate(1_000_000, 8080, np.arange(20))
    for f in (Indicator(1) if model.state_space else Above(0.0), Identity()):
        traces = traces_from_batch(batch, model, f, cps)
        if gap_decay_check(traces).passed:
            stab = stabilization(traces)
            assert stab["mean_fX"] == stab["mean_xif"], (f.id, stab)


def test_csv_export():
    traces = run_traces(IidUniformBernoulli(), Indicator(1), 100, (10, 100), 12, 2)
    text = traces_to_csv(traces)
    rows = list(csv.DictReader(io.StringIO(text)))
    assert list(rows[0]) == ["n", "mean_fX", "mean_xif", "gap", "replication", "seed"]
    assert len(rows) == 4
    assert float(rows[1]["mean_fX"]) == traces[0].checkpoints[1].mean_fX
    assert rows[3]["replication"] == "1" and rows[3]["seed"] == "12"
