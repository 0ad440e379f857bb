"""Probability measures on finite sets and scaled compact laws on the line."""

from __future__ import annotations

import bisect
import math
from collections.abc import Callable, Hashable, Sequence
from dataclasses import dataclass, field
from numbers import Real

import numpy as np

NORMALIZATION_TOL = 1e-12


class DomainError(ValueError):
    """An observable or operation is undefined on part of a measure's support."""


def _evaluate(f: Callable, x):
    try:
        value = f(x)
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"observable undefined at {x!r}") from exc
    if value is None:
        raise DomainError(f"observable undefined at {x!r}")
    return float(value)


@dataclass(frozen=True)
class FiniteMeasure:
    support: tuple
    weights: tuple[float, ...]
    _cumulative: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __init__(self, support: Sequence[Hashable], weights: Sequence[float]):
        support = tuple(support)
        weights = tuple(float(w) for w in weights)
        if len(support) != len(weights):
            raise ValueError("support and weights differ in length")
        if not support:
            raise ValueError("empty support")
        if len(set(support)) != len(support):
            raise ValueError("support labels must be distinct")
        if any(not math.isfinite(w) or w < 0.0 for w in weights):
            raise ValueError(f"weights must be finite and non-negative: {weights}")
        total = math.fsum(weights)
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise ValueError(f"weights sum to {total!r}, not 1")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "_cumulative", tuple(np.cumsum(weights[:-1])))

    @classmethod
    def bernoulli(cls, p: float, support=(0, 1)) -> FiniteMeasure:
        """Two-point law putting mass ``p`` on ``support[1]``."""
        return cls(support, (1.0 - p, p))

    def __getitem__(self, label) -> float:
        """Mass of a single state (0 off the support)."""
        try:
            return self.weights[self.support.index(label)]
        except ValueError:
            return 0.0

    def mass(self, subset) -> float:
        return math.fsum(w for s, w in zip(self.support, self.weights) if s in subset)

    def integrate(self, f: Callable) -> float:
        return math.fsum(w * _evaluate(f, s) for s, w in zip(self.support, self.weights))

    def mean(self) -> float:
        if not all(isinstance(s, Real) for s in self.support):
            raise DomainError("mean needs a numeric support")
        return self.integrate(lambda x: x)

    def index_for(self, u: float) -> int:
        """Inverse-CDF lookup of a uniform draw."""
        return bisect.bisect_right(self._cumulative, u)

    def sample(self, stream):
        return self.support[self.index_for(stream.next_uniform())]


@dataclass(frozen=True)
class PointMass:
    atom: Hashable

    @property
    def support(self) -> tuple:
        return (self.atom,)

    @property
    def weights(self) -> tuple[float, ...]:
        return (1.0,)

    def __getitem__(self, label) -> float:
        return 1.0 if label == self.atom else 0.0

    def mass(self, subset) -> float:
        return 1.0 if self.atom in subset else 0.0

    def integrate(self, f: Callable) -> float:
        return _evaluate(f, self.atom)

    def mean(self) -> float:
        if not isinstance(self.atom, Real):
            raise DomainError("mean needs a numeric support")
        return float(self.atom)

    def sample(self, stream):
        stream.uniforms(1)  # keep stream positions aligned with other measures
        return self.atom


class UniformLaw:
    """Uniform law on ``[-half_width, half_width]``; the base law of SV innovations."""

    def __init__(self, half_width: float):
        if not half_width > 0:
            raise ValueError("half_width must be positive")
        self.half_width = float(half_width)

    @property
    def id(self) -> str:
        return f"uniform(-{self.half_width!r},{self.half_width!r})"

    def cdf(self, x):
        c = self.half_width
        return np.clip((np.asarray(x, dtype=float) + c) / (2.0 * c), 0.0, 1.0)

    def from_uniform(self, u):
        return self.half_width * (2.0 * np.asarray(u, dtype=float) - 1.0)

    def variance(self) -> float:
        return self.half_width**2 / 3.0


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


_QUAD_CHUNK = 1 << 16


def expect_scaled_uniform(f, scale, half_width: float, breakpoints=()) -> np.ndarray:
    """E f(scale * Z) for Z uniform on [-c, c], vectorized over ``scale``.

    Gauss-Legendre on each piece between the observable's breakpoints, so
    piecewise polynomials of degree < 48 are integrated exactly.
    """
    scale = np.asarray(scale, dtype=float)
    flat = scale.reshape(-1)
    out = np.empty(flat.shape)
    # bounded working set: one (chunk, nodes) block per piece
    for i in range(0, flat.size, _QUAD_CHUNK):
        out[i : i + _QUAD_CHUNK] = _expect_block(f, flat[i : i + _QUAD_CHUNK], half_width, breakpoints)
    return out.reshape(scale.shape)


def _expect_block(f, scale, c, breakpoints):
    cuts = [np.full(scale.shape, -c)]
    for b in sorted(breakpoints):
        cuts.append(np.clip(b / scale, -c, c))
    cuts.append(np.full(scale.shape, c))
    total = np.zeros(scale.shape)
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        z = mid[..., None] + half[..., None] * _GL_NODES
        vals = np.asarray(f(scale[..., None] * z), dtype=float)
        total += half * (vals @ _GL_WEIGHTS)
    return total / (2.0 * c)


@dataclass(frozen=True)
class PushforwardMeasure:
    """Law of ``scale * Z`` where Z follows a fixed base law."""

    base: UniformLaw
    scale: float

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("scale must be positive")

    @property
    def base_id(self) -> str:
        return self.base.id

    def interval_mass(self, lo: float, hi: float) -> float:
        if hi < lo:
            return 0.0
        return float(self.base.cdf(hi / self.scale) - self.base.cdf(lo / self.scale))

    def integrate(self, f: Callable) -> float:
        breakpoints = getattr(f, "breakpoints", ())
        return float(expect_scaled_uniform(f, self.scale, self.base.half_width, breakpoints))

    def mean(self) -> float:
        return 0.0

    def sample(self, stream) -> float:
        return float(self.scale * self.base.from_uniform(stream.next_uniform()))


def integrate(m, f: Callable) -> float:
    return m.integrate(f)


def mean(m) -> float:
    return m.mean()


def sample(m, stream):
    return m.sample(stream)
