"""Running means of f(X_i) and xi_i(f), their gap, and decay diagnostics."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .measure import UniformLaw
from .models import Batch, LatentPath, Model, ObservedPath, StochasticVolatility, SubmartingaleCoin, SVParams
from .observables import Indicator, Observable
from .rng import StreamKey, uniform_matrix

DEFAULT_CHECKPOINTS = (100, 1_000, 10_000, 100_000)
STABLE_TOL = 5e-3


@dataclass(frozen=True)
class Checkpoint:
    n: int
    mean_fX: float
    mean_xif: float
    gap: float


@dataclass
class ConvergenceTrace:
    checkpoints: list[Checkpoint]
    model_id: str
    key: StreamKey
    observable_id: str
    f_values: np.ndarray | None = field(default=None, repr=False)
    xi_values: np.ndarray | None = field(default=None, repr=False)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(c, name) for c in self.checkpoints])

    @property
    def terminal(self) -> Checkpoint:
        return self.checkpoints[-1]

    def stabilized(self, name: str = "mean_fX", tol: float = STABLE_TOL) -> bool:
        values = self.column(name)
        return bool(abs(values[-1] - values[-2]) < tol)


def prefix_sums(values: np.ndarray, checkpoints) -> list[float]:
    """Correctly rounded sums of values[:n] for each checkpoint n."""
    return [math.fsum(values[:n]) for n in checkpoints]


def _validate_checkpoints(checkpoints, horizon):
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    cps = [int(c) for c in checkpoints]
    if not cps or any(b <= a for a, b in zip(cps, cps[1:])) or cps[0] < 1:
        raise ValueError("checkpoints must be positive and strictly increasing")
    if cps[-1] > horizon:
        raise ValueError(f"last checkpoint {cps[-1]} exceeds horizon {horizon}")
    return cps


def traces_from_batch(batch: Batch, model: Model, f: Observable, checkpoints, keep_values=False):
    cps = _validate_checkpoints(checkpoints, batch.horizon)
    fx = np.asarray(f(batch.points), dtype=float)
    xi = model.xi_integrals(batch.latent, f)
    traces = []
    for r, sid in enumerate(batch.stream_ids):
        s_fx = prefix_sums(fx[r], cps)
        s_xi = prefix_sums(xi[r], cps)
        rows = []
        for n, a, b in zip(cps, s_fx, s_xi):
            mf, mx = a / n, b / n
            rows.append(Checkpoint(n, mf, mx, mf - mx))
        traces.append(
            ConvergenceTrace(
                rows,
                batch.model_id,
                StreamKey(batch.seed, int(sid)),
                f.id,
                fx[r] if keep_values else None,
                xi[r] if keep_values else None,
            )
        )
    return traces


def trace_from_paths(latent: LatentPath, observed: ObservedPath, f, checkpoints, key: StreamKey | None = None):
    """Trace of explicit paths, with xi_i(f) from each measure's own integral."""
    cps = _validate_checkpoints(checkpoints, latent.horizon)
    fx = np.array([float(f(x)) for x in observed.points])
    xi = np.array([m.integrate(f) for m in latent.measures])
    rows = []
    for n, a, b in zip(cps, prefix_sums(fx, cps), prefix_sums(xi, cps)):
        rows.append(Checkpoint(n, a / n, b / n, a / n - b / n))
    return ConvergenceTrace(rows, latent.model_id, key or StreamKey(0), getattr(f, "id", "custom"), fx, xi)


def run_trace(model: Model, f: Observable, horizon: int, checkpoints, key: StreamKey, keep_values=True):
    """One two-stage path of length ``horizon`` and its running means."""
    if not isinstance(f, Observable) and not callable(f):
        raise KeyError(f"unknown observable {f!r}")
    batch = model.simulate(horizon, key.seed, [key.stream_id])
    return traces_from_batch(batch, model, f, checkpoints, keep_values)[0]


def run_traces(model: Model, f: Observable, horizon: int, checkpoints, seed: int, replications: int, first_stream=0):
    """``replications`` independent traces on stream ids first_stream, first_stream+1, ..."""
    batch = model.simulate(horizon, seed, np.arange(first_stream, first_stream + replications))
    return traces_from_batch(batch, model, f, checkpoints)


@dataclass
class DecayReport:
    passed: bool
    decades: list[int]
    median_abs_gap: list[float]
    gamma: float
    floor: float
    failures: list[str]

    def as_dict(self):
        return {
            "passed": self.passed,
            "decades": self.decades,
            "median_abs_gap": self.median_abs_gap,
            "gamma": self.gamma,
            "floor": self.floor,
            "failures": self.failures,
        }


class CheckpointError(ValueError):
    pass


def gap_decay_check(traces, gamma: float = 0.5, floor: float = 1e-3) -> DecayReport:
    """Median |gap| across replications must shrink by ``gamma`` per decade or sit below ``floor``."""
    if not traces:
        raise ValueError("no traces")
    if len({(t.model_id, t.observable_id) for t in traces}) != 1:
        raise ValueError("traces mix models or observables")
    shared = set.intersection(*({c.n for c in t.checkpoints} for t in traces))
    decades = sorted(n for n in shared if n >= 1 and 10 ** round(math.log10(n)) == n)
    if len(decades) < 3:
        raise CheckpointError(f"need checkpoints at 3 or more powers of ten, got {decades}")
    medians = []
    for n in decades:
        gaps = [abs(next(c.gap for c in t.checkpoints if c.n == n)) for t in traces]
        medians.append(float(np.median(gaps)))
    failures = []
    for (n0, g0), (n1, g1) in zip(zip(decades, medians), zip(decades[1:], medians[1:])):
        if g1 > max(gamma * g0, floor):
            failures.append(f"median |gap| {g1:.3e} at n={n1} exceeds max({gamma}*{g0:.3e}, {floor}) from n={n0}")
    return DecayReport(not failures, decades, medians, gamma, floor, failures)


def stabilization(traces, tol: float = STABLE_TOL) -> dict[str, bool]:
    """Desk-scale convergence proxy: median |change| over the last two checkpoints below ``tol``."""
    out = {}
    for name in ("mean_fX", "mean_xif"):
        deltas = [abs(t.column(name)[-1] - t.column(name)[-2]) for t in traces]
        out[name] = bool(np.median(deltas) < tol)
    return out


def submartingale_limit_estimate(trace: ConvergenceTrace, latent) -> tuple[float, float]:
    """(theta_N, terminal proportion of ones); theta_N is within 2^-(N+1) of theta_inf.

    ``latent`` is the path's LatentPath or just its terminal theta.
    """
    if trace.model_id != SubmartingaleCoin.model_id or trace.observable_id != Indicator.id:
        raise ValueError("submartingale_limit_estimate needs a submartingale_coin trace of the indicator")
    theta_n = latent.measures[-1][1] if isinstance(latent, LatentPath) else latent
    return float(theta_n), trace.terminal.mean_fX


def submartingale_estimates(seed: int, horizon: int, replications: int):
    """theta_N and the terminal proportion of ones for each replication."""
    model = SubmartingaleCoin()
    batch = model.simulate(horizon, seed, np.arange(replications))
    f = Indicator(1)
    traces = traces_from_batch(batch, model, f, [horizon])
    return [submartingale_limit_estimate(t, batch.latent[r, -1]) for r, t in enumerate(traces)]


@dataclass
class SVEstimate:
    path_average: float
    path_average_se: float
    direct: float
    direct_se: float

    @property
    def combined_se(self) -> float:
        return math.hypot(self.path_average_se, self.direct_se)

    def agree(self, k: float = 3.0) -> bool:
        return abs(self.path_average - self.direct) <= k * self.combined_se


# substream of the direct H_0 draws; disjoint from the path substreams 0 and 1
DIRECT_SUBSTREAM = 2


def sv_functional_estimate(params: SVParams, f, horizon: int, key: StreamKey, replications: int, direct_draws=100_000):
    """Two independent estimates of E g(H_0), g(h) = integral of f against the law of exp(h/2) Z.

    The path average uses observed X only; the direct estimate draws H_0 from
    the truncated stationary series and integrates f over Z by quadrature.
    """
    model = StochasticVolatility(params)
    batch = model.simulate(horizon, key.seed, np.arange(key.stream_id, key.stream_id + replications))
    fx = np.asarray(f(batch.points), dtype=float)
    per_path = np.array([math.fsum(row) / horizon for row in fx])
    pa = float(np.mean(per_path))
    pa_se = float(np.std(per_path, ddof=1) / math.sqrt(replications)) if replications > 1 else math.inf

    u = uniform_matrix(key.seed, [key.stream_id], DIRECT_SUBSTREAM, direct_draws * (params.K + 1))[0]
    w = UniformLaw(params.c_w).from_uniform(u.reshape(direct_draws, params.K + 1))
    h0 = model.stationary_start(w)
    g = model.xi_integrals(h0, f)
    direct = float(np.mean(g))
    direct_se = float(np.std(g, ddof=1) / math.sqrt(direct_draws))
    return SVEstimate(pa, pa_se, direct, direct_se)


TRACE_COLUMNS = ("n", "mean_fX", "mean_xif", "gap", "replication", "seed")


def _fmt(x: float) -> str:
    return repr(float(x)) if not math.isfinite(x) else format(float(x), ".17g")


def traces_to_csv(traces) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    for t in traces:
        for c in t.checkpoints:
            writer.writerow([c.n, _fmt(c.mean_fX), _fmt(c.mean_xif), _fmt(c.gap), t.key.stream_id, t.key.seed])
    return buf.getvalue()
