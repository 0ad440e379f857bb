"""Example processes driven by a hidden sequence of random measures.

Every model samples in two stages. Stage one draws the latent measures
xi_0..xi_{n-1} from substream 0 of a key; stage two draws X_i ~ xi_i
independently from substream 1. The per-path stream layout is fixed (each
model consumes a known number of uniforms), so the bulk ``simulate`` path and
the single-path ``sample_latent``/``sample_observed`` path agree bit for bit.

Bulk results carry a compact latent *state* per step instead of measure
objects: the mass on the upper state for two-point models, a regime index
for regime switching, and the log-volatility for stochastic volatility.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .measure import FiniteMeasure, PointMass, PushforwardMeasure, UniformLaw, expect_scaled_uniform
from .rng import LATENT, OBSERVED, Stream, StreamKey, uniform_matrix


class ModelInvariantError(ValueError):
    """Model parameters violate a stated invariant."""


class EmptyPathError(ValueError):
    pass


@dataclass(frozen=True)
class LatentPath:
    measures: tuple
    model_id: str

    @property
    def horizon(self) -> int:
        return len(self.measures)


@dataclass(frozen=True)
class ObservedPath:
    points: tuple
    model_id: str
    key: StreamKey | None = None

    def __len__(self):
        return len(self.points)


@dataclass
class Batch:
    """R independent two-stage paths of length n, one per stream id."""

    model_id: str
    seed: int
    stream_ids: np.ndarray
    latent: np.ndarray
    points: np.ndarray

    @property
    def replications(self) -> int:
        return self.points.shape[0]

    @property
    def horizon(self) -> int:
        return self.points.shape[1]


def _check_horizon(n):
    if n < 1:
        raise EmptyPathError("horizon must be at least 1")


class Model:
    """Two-stage sampler. Subclasses define the latent law and its measures."""

    model_id = "model"
    state_space: tuple | None = None  # None for continuous state spaces
    unit_interval = False  # whether S is a subset of [0, 1]

    def latent_draws(self, n: int) -> int:
        return n

    def latent_state(self, u: np.ndarray, n: int) -> np.ndarray:
        raise NotImplementedError

    def measure_at(self, state) -> object:
        raise NotImplementedError

    def observe(self, state: np.ndarray, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def xi_integrals(self, state: np.ndarray, f) -> np.ndarray:
        """Exact xi_i(f) for every step of every path."""
        raise NotImplementedError

    def xi_means(self, state: np.ndarray) -> np.ndarray:
        """Exact mean of each xi_i; numeric state spaces only."""
        return self.xi_integrals(state, lambda x: np.asarray(x, dtype=float))

    # single-path API

    def sample_latent(self, n: int, stream: Stream) -> LatentPath:
        _check_horizon(n)
        u = stream.uniforms(self.latent_draws(n))
        state = self.latent_state(u[None, :], n)[0]
        return LatentPath(tuple(self.measure_at(s) for s in state), self.model_id)

    def sample_observed(self, latent: LatentPath, stream: Stream) -> ObservedPath:
        points = tuple(m.sample(stream) for m in latent.measures)
        return ObservedPath(points, latent.model_id, getattr(stream, "key", None))

    def sample_path(self, n: int, key: StreamKey) -> tuple[LatentPath, ObservedPath]:
        latent = self.sample_latent(n, key.substream(LATENT).stream())
        return latent, self.sample_observed(latent, key.substream(OBSERVED).stream())

    # bulk API

    def simulate(self, n: int, seed: int, stream_ids) -> Batch:
        _check_horizon(n)
        ids = np.atleast_1d(np.asarray(stream_ids, dtype=np.uint64))
        u_lat = uniform_matrix(seed, ids, LATENT, self.latent_draws(n))
        state = self.latent_state(u_lat, n)
        u_obs = uniform_matrix(seed, ids, OBSERVED, n)
        return Batch(self.model_id, seed, ids, state, self.observe(state, u_obs))

    def describe(self) -> dict:
        return {"id": self.model_id}


class _TwoPointModel(Model):
    """Latent state is the mass xi_i puts on ``state_space[1]``."""

    state_space = (0, 1)
    unit_interval = True

    def measure_at(self, p):
        return FiniteMeasure.bernoulli(float(p), self.state_space)

    def observe(self, p, u):
        lo, hi = self.state_space
        return np.where(u >= 1.0 - p, hi, lo)

    def xi_integrals(self, p, f):
        lo, hi = self.state_space
        return (1.0 - p) * float(f(lo)) + p * float(f(hi))


class IidUniformBernoulli(_TwoPointModel):
    """xi_i(1) = theta_i with theta_i iid uniform on [0, 1]."""

    model_id = "iid_uniform_bernoulli"

    def latent_state(self, u, n):
        return u.copy()


class RandomWalk(_TwoPointModel):
    """Rademacher steps Z_i = 2 X_i - 1 with X driven as in the iid uniform model."""

    model_id = "random_walk"
    state_space = (-1, 1)
    unit_interval = False

    def latent_state(self, u, n):
        return u.copy()


def from_bernoulli(path) -> np.ndarray:
    """Partial sums S_0 = 0, S_k = sum of the first k steps 2 x_i - 1."""
    points = path.points if isinstance(path, ObservedPath) else path
    x = np.asarray(points)
    if not np.all((x == 0) | (x == 1)):
        raise ValueError("random walk needs a binary path")
    steps = 2 * x.astype(np.int64) - 1
    return np.concatenate([[0], np.cumsum(steps)])


# exchangeable priors over theta in [0, 1]


class Prior:
    id = "prior"

    def from_uniform(self, u):
        raise NotImplementedError

    def expect(self, fn) -> float:
        raise NotImplementedError

    def describe(self) -> dict:
        return {"id": self.id}


class PointPrior(Prior):
    id = "point"

    def __init__(self, p: float = 0.5):
        if not 0.0 <= p <= 1.0:
            raise ModelInvariantError(f"point prior needs p in [0, 1], got {p}")
        self.p = float(p)

    def from_uniform(self, u):
        return np.full(np.shape(u), self.p)

    def expect(self, fn):
        return float(fn(self.p))

    def mean(self):
        return self.p

    def variance(self):
        return 0.0

    def describe(self):
        return {"id": self.id, "p": self.p}


class UniformPrior(Prior):
    id = "uniform"
    quadrature_points = 100_000

    def from_uniform(self, u):
        return np.asarray(u, dtype=float).copy()

    def expect(self, fn):
        m = self.quadrature_points
        nodes = (np.arange(m) + 0.5) / m
        return float(np.mean(fn(nodes)))

    def mean(self):
        return 0.5

    def variance(self):
        return 1.0 / 12.0


class TwoPointPrior(Prior):
    """theta = high with probability p_high, otherwise low."""

    id = "two_point"

    def __init__(self, low: float = 0.25, high: float = 0.75, p_high: float = 0.5):
        if not (0.0 <= low <= 1.0 and 0.0 <= high <= 1.0 and 0.0 <= p_high <= 1.0):
            raise ModelInvariantError("two-point prior values and probability must lie in [0, 1]")
        self.low, self.high, self.p_high = float(low), float(high), float(p_high)

    def from_uniform(self, u):
        return np.where(np.asarray(u) < self.p_high, self.high, self.low)

    def expect(self, fn):
        return self.p_high * float(fn(self.high)) + (1.0 - self.p_high) * float(fn(self.low))

    def mean(self):
        return self.p_high * self.high + (1.0 - self.p_high) * self.low

    def variance(self):
        return self.p_high * (1.0 - self.p_high) * (self.high - self.low) ** 2

    def describe(self):
        return {"id": self.id, "low": self.low, "high": self.high, "p_high": self.p_high}


PRIORS = {"point": PointPrior, "uniform": UniformPrior, "two_point": TwoPointPrior}


def make_prior(spec) -> Prior:
    if isinstance(spec, Prior):
        return spec
    if isinstance(spec, str):
        spec = {"id": spec}
    spec = dict(spec)
    name = spec.pop("id", None)
    if name not in PRIORS:
        raise ModelInvariantError(f"unknown prior {name!r}; choose from {sorted(PRIORS)}")
    return PRIORS[name](**spec)


class ExchangeableBernoulli(_TwoPointModel):
    """One theta from the prior; every xi_i puts mass theta on 1."""

    model_id = "exchangeable_bernoulli"

    def __init__(self, prior="uniform"):
        self.prior = make_prior(prior)

    def latent_draws(self, n):
        return 1

    def latent_state(self, u, n):
        theta = self.prior.from_uniform(u[:, 0])
        return np.repeat(theta[:, None], n, axis=1)

    def describe(self):
        return {"id": self.model_id, "prior": self.prior.describe()}


def stationary_vector(Q) -> np.ndarray:
    """Stationary law of an irreducible two-state chain (closed form)."""
    Q = np.asarray(Q, dtype=float)
    if Q.shape != (2, 2):
        raise ModelInvariantError("transition matrix must be 2x2")
    flow = Q[0, 1] + Q[1, 0]
    if flow == 0.0:
        raise ModelInvariantError("reducible chain: Q[0,1] + Q[1,0] = 0, stationary law not unique")
    pi_mu = Q[1, 0] / flow
    return np.array([pi_mu, 1.0 - pi_mu])


@dataclass(frozen=True)
class RegimeParams:
    mu1: float
    lambda1: float
    Q: tuple
    pi: tuple | None = None
    irreducible: bool = True

    def __post_init__(self):
        Q = np.asarray(self.Q, dtype=float)
        if Q.shape != (2, 2) or not np.all(np.isfinite(Q)):
            raise ModelInvariantError("Q must be a finite 2x2 matrix")
        if np.any(Q < 0.0):
            raise ModelInvariantError("Q entries must be non-negative")
        sums = Q.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > 1e-12):
            raise ModelInvariantError(f"Q rows must sum to 1 within 1e-12, got row sums {sums.tolist()}")
        if not (0.0 <= self.lambda1 <= 1.0 and 0.0 <= self.mu1 <= 1.0):
            raise ModelInvariantError("mu1 and lambda1 must lie in [0, 1]")
        if not self.mu1 > self.lambda1:
            raise ModelInvariantError(f"regime ordering requires mu1 > lambda1, got {self.mu1} <= {self.lambda1}")
        if self.pi is None:
            pi = stationary_vector(Q)
        else:
            pi = np.asarray(self.pi, dtype=float)
            if pi.shape != (2,) or np.any(pi < 0.0) or abs(pi.sum() - 1.0) > 1e-12:
                raise ModelInvariantError("pi must be a probability vector of length 2")
        if np.max(np.abs(pi @ Q - pi)) > 1e-10:
            raise ModelInvariantError("pi is not stationary for Q (|pi Q - pi| > 1e-10)")
        if self.irreducible and not np.all((pi > 0.0) & (pi < 1.0)):
            raise ModelInvariantError("irreducible chain needs pi entries in (0, 1)")
        object.__setattr__(self, "Q", tuple(map(tuple, Q.tolist())))
        object.__setattr__(self, "pi", tuple(pi.tolist()))

    @property
    def mu(self) -> FiniteMeasure:
        return FiniteMeasure.bernoulli(self.mu1, (-1, 1))

    @property
    def lam(self) -> FiniteMeasure:
        return FiniteMeasure.bernoulli(self.lambda1, (-1, 1))

    @property
    def regimes(self) -> tuple[FiniteMeasure, FiniteMeasure]:
        return self.mu, self.lam

    def describe(self) -> dict:
        return {
            "mu1": self.mu1,
            "lambda1": self.lambda1,
            "Q": [list(r) for r in self.Q],
            "pi": list(self.pi),
        }


class RegimeSwitching(Model):
    """Latent Markov chain on the regimes (mu, lambda), started from pi; S = {-1, 1}.

    Latent state is the regime index: 0 for mu, 1 for lambda.
    """

    model_id = "regime_switching"
    state_space = (-1, 1)

    def __init__(self, params: RegimeParams):
        self.params = params
        self._upper = np.array([params.mu1, params.lambda1])

    def latent_state(self, u, n):
        p = self.params
        stay_mu = np.array([p.Q[0][0], p.Q[1][0]])  # P(next = mu | current)
        r = np.empty(u.shape, dtype=np.int64)
        r[:, 0] = np.where(u[:, 0] < p.pi[0], 0, 1)
        for k in range(1, n):
            r[:, k] = np.where(u[:, k] < stay_mu[r[:, k - 1]], 0, 1)
        return r

    def measure_at(self, r):
        return self.params.regimes[int(r)]

    def observe(self, r, u):
        return np.where(u >= 1.0 - self._upper[r], 1, -1)

    def xi_integrals(self, r, f):
        f_lo, f_hi = float(f(-1)), float(f(1))
        upper = self._upper[r]
        return (1.0 - upper) * f_lo + upper * f_hi

    def describe(self):
        return {"id": self.model_id, **self.params.describe()}


class SubmartingaleCoin(_TwoPointModel):
    """theta_0 = U_0 / 2, theta_n = theta_{n-1} + 2^-(n+1) U_n; xi_n(1) = theta_n."""

    model_id = "submartingale_coin"

    def latent_state(self, u, n):
        weights = np.ldexp(1.0, -(np.arange(n) + 1))
        return np.cumsum(u * weights, axis=1)


def truncation_depth(beta: float, c_w: float, tol: float = 1e-10) -> int:
    """Smallest K >= 1 with |beta|^(K+1) c_W / (1 - |beta|) <= tol."""
    b = abs(beta)
    if b == 0.0:
        return 1
    k = math.ceil(math.log(tol * (1.0 - b) / c_w) / math.log(b)) - 1
    k = max(k, 1)
    while b ** (k + 1) * c_w / (1.0 - b) > tol:
        k += 1
    return k


@dataclass(frozen=True)
class SVParams:
    alpha: float = 0.0
    beta: float = 0.9
    c_w: float = 0.5
    c_z: float = 1.0
    K: int | None = field(default=None)

    def __post_init__(self):
        if not abs(self.beta) < 1.0:
            raise ModelInvariantError(f"stationarity requires |beta| < 1, got {self.beta}")
        if not (self.c_w > 0 and self.c_z > 0):
            raise ModelInvariantError("innovation half-widths c_w, c_z must be positive")
        if self.K is None:
            object.__setattr__(self, "K", truncation_depth(self.beta, self.c_w))
        if self.K < 1:
            raise ModelInvariantError("truncation depth K must be a positive integer")
        if self.tail_bound() > 1e-10:
            raise ModelInvariantError(f"truncation tail bound {self.tail_bound():.3e} exceeds 1e-10; raise K")

    def tail_bound(self) -> float:
        b = abs(self.beta)
        return b ** (self.K + 1) * self.c_w / (1.0 - b)

    def h_bound(self) -> float:
        b = abs(self.beta)
        return (abs(self.alpha) + self.c_w) / (1.0 - b)

    def describe(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "c_w": self.c_w, "c_z": self.c_z, "K": self.K}


class StochasticVolatility(Model):
    """X_t = exp(H_t / 2) Z_t with H_t = alpha + beta H_{t-1} + W_t.

    W and Z are uniform on [-c_W, c_W] and [-c_Z, c_Z]. H_0 is the stationary
    series alpha / (1 - beta) + sum_{k<=K} beta^k W_{-k}, truncated at K.
    Latent state is H; xi_t is the law of exp(H_t / 2) Z.
    """

    model_id = "stochastic_volatility"

    def __init__(self, params: SVParams | None = None):
        self.params = params or SVParams()
        self.w_law = UniformLaw(self.params.c_w)
        self.z_law = UniformLaw(self.params.c_z)

    def latent_draws(self, n):
        return self.params.K + 1 + (n - 1)

    def stationary_start(self, w_past: np.ndarray) -> np.ndarray:
        """H_0 from innovations W_0, W_-1, ..., W_-K (columns in that order)."""
        p = self.params
        acc = np.zeros(w_past.shape[0])
        weight = 1.0
        for k in range(w_past.shape[1]):
            acc += weight * w_past[:, k]
            weight *= p.beta
        return p.alpha / (1.0 - p.beta) + acc

    def latent_state(self, u, n):
        p = self.params
        w = self.w_law.from_uniform(u)
        h = np.empty((u.shape[0], n))
        h[:, 0] = self.stationary_start(w[:, : p.K + 1])
        for t in range(1, n):
            h[:, t] = p.alpha + p.beta * h[:, t - 1] + w[:, p.K + t]
        return h

    def scales(self, h):
        return np.exp(np.asarray(h) / 2.0)

    def sample_latent(self, n, stream):
        _check_horizon(n)
        u = stream.uniforms(self.latent_draws(n))
        h = self.latent_state(u[None, :], n)[0]
        return LatentPath(tuple(PushforwardMeasure(self.z_law, float(s)) for s in self.scales(h)), self.model_id)

    def measure_at(self, h):
        return PushforwardMeasure(self.z_law, float(self.scales(h)))

    def observe(self, h, u):
        return self.scales(h) * self.z_law.from_uniform(u)

    def xi_integrals(self, h, f):
        return expect_scaled_uniform(f, self.scales(h), self.params.c_z, getattr(f, "breakpoints", ()))

    def xi_means(self, h):
        return np.zeros(np.shape(h))

    def describe(self):
        return {"id": self.model_id, **self.params.describe()}


def canonical_disintegration(path: ObservedPath) -> LatentPath:
    """Point masses at the observed points."""
    return LatentPath(tuple(PointMass(x) for x in path.points), path.model_id)


class Canonical(Model):
    """The canonical disintegration of another model: xi_i = delta_{X_i}.

    Observations come from ``base``; the latent state is the observed point.
    """

    def __init__(self, base: Model):
        self.base = base
        self.model_id = f"canonical:{base.model_id}"
        self.state_space = base.state_space
        self.unit_interval = base.unit_interval

    def sample_path(self, n, key):
        _, observed = self.base.sample_path(n, key)
        return canonical_disintegration(observed), observed

    def simulate(self, n, seed, stream_ids):
        base = self.base.simulate(n, seed, stream_ids)
        return Batch(self.model_id, seed, base.stream_ids, base.points.copy(), base.points)

    def measure_at(self, x):
        return PointMass(x)

    def observe(self, x, u):
        return x.copy()

    def xi_integrals(self, x, f):
        return np.asarray(f(x), dtype=float)

    def xi_means(self, x):
        return np.asarray(x, dtype=float)

    def describe(self):
        return {"id": "canonical", "base": self.base.describe()}


MODEL_IDS = (
    "iid_uniform_bernoulli",
    "random_walk",
    "exchangeable_bernoulli",
    "regime_switching",
    "submartingale_coin",
    "stochastic_volatility",
)


def make_model(model_id: str, params: dict | None = None) -> Model:
    """Build a model from its id and a plain parameter dict (config form)."""
    params = dict(params or {})
    try:
        if model_id == "canonical":
            base = params.pop("base")
            if isinstance(base, str):
                base = {"id": base}
            base = dict(base)
            return Canonical(make_model(base.pop("id"), base.pop("params", base)))
        if model_id == "iid_uniform_bernoulli":
            model = IidUniformBernoulli()
        elif model_id == "random_walk":
            model = RandomWalk()
        elif model_id == "submartingale_coin":
            model = SubmartingaleCoin()
        elif model_id == "exchangeable_bernoulli":
            return ExchangeableBernoulli(params.pop("prior", "uniform"))
        elif model_id == "regime_switching":
            return RegimeSwitching(RegimeParams(**params))
        elif model_id == "stochastic_volatility":
            return StochasticVolatility(SVParams(**params))
        else:
            raise KeyError(f"unknown model {model_id!r}; choose from {list(MODEL_IDS) + ['canonical']}")
    except TypeError as exc:
        raise ModelInvariantError(f"bad parameters for {model_id}: {exc}") from exc
    if params:
        raise ModelInvariantError(f"{model_id} takes no parameters, got {sorted(params)}")
    return model
