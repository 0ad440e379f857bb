"""Exact finite-dimensional laws of the discrete models.

P(X_i in A_i for each constrained i) = E[prod_i xi_i(A_i)], evaluated in
closed form, by prior quadrature, or by enumerating latent regime sequences.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np

from .models import (
    ExchangeableBernoulli,
    IidUniformBernoulli,
    Model,
    RandomWalk,
    RegimeParams,
    RegimeSwitching,
    UniformPrior,
    stationary_vector,
)

MAX_ENUMERATION_INDEX = 20

__all__ = [
    "CylinderEvent",
    "UnsupportedModelError",
    "joint_exact",
    "joint_table",
    "regime_ergodic_limit",
    "stationary_vector",
]


class UnsupportedModelError(ValueError):
    pass


@dataclass(frozen=True)
class CylinderEvent:
    """Conjunction of constraints X_i in A_i over finitely many indices."""

    coords: tuple[tuple[int, frozenset], ...]

    def __init__(self, coords):
        if isinstance(coords, dict):
            coords = coords.items()
        norm = []
        for i, subset in coords:
            if isinstance(subset, (set, frozenset, list, tuple)):
                subset = frozenset(subset)
            else:
                subset = frozenset([subset])
            if int(i) != i or i < 0:
                raise ValueError(f"event index must be a non-negative integer, got {i!r}")
            if not subset:
                raise ValueError(f"empty subset at index {i}")
            norm.append((int(i), subset))
        indices = [i for i, _ in norm]
        if len(set(indices)) != len(indices):
            raise ValueError("event indices must be distinct")
        object.__setattr__(self, "coords", tuple(sorted(norm)))

    @classmethod
    def point(cls, xs: Iterable) -> CylinderEvent:
        """The event {X_0 = x_0, ..., X_k = x_k}."""
        return cls([(i, {x}) for i, x in enumerate(xs)])

    @property
    def last_index(self) -> int:
        return max((i for i, _ in self.coords), default=-1)

    def check_states(self, state_space) -> None:
        for i, subset in self.coords:
            extra = subset - set(state_space)
            if extra:
                raise ValueError(f"index {i}: states {sorted(extra)} outside S = {state_space}")


def _upper_counts(event: CylinderEvent, state_space) -> tuple[int, int]:
    """Counts of coordinates pinned to the upper / lower state.

    Coordinates constrained to the whole space contribute a factor 1.
    """
    lo, hi = state_space
    a = sum(1 for _, s in event.coords if s == {hi})
    b = sum(1 for _, s in event.coords if s == {lo})
    return a, b


def beta_moment(a: int, b: int) -> float:
    """int_0^1 t^a (1-t)^b dt = a! b! / (a+b+1)!."""
    return math.factorial(a) * math.factorial(b) / math.factorial(a + b + 1)


def _regime_enumeration(params: RegimeParams, event: CylinderEvent) -> float:
    n = event.last_index
    if n < 0:
        return 1.0
    constraint = dict(event.coords)
    # xi_k(A_k) for each regime: row 0 = mu, row 1 = lambda
    factor = np.ones((2, n + 1))
    for k, subset in constraint.items():
        for r, m in enumerate(params.regimes):
            factor[r, k] = m.mass(subset)
    Q = np.asarray(params.Q)
    pi = np.asarray(params.pi)
    seqs = np.array(list(itertools.product((0, 1), repeat=n + 1)), dtype=np.int64)
    weight = pi[seqs[:, 0]] * factor[seqs[:, 0], 0]
    for k in range(1, n + 1):
        weight = weight * Q[seqs[:, k - 1], seqs[:, k]] * factor[seqs[:, k], k]
    return math.fsum(weight)


def joint_exact(model: Model, event: CylinderEvent) -> float:
    """Exact probability of a cylinder event under a discrete model."""
    if not isinstance(model, (IidUniformBernoulli, RandomWalk, ExchangeableBernoulli, RegimeSwitching)):
        raise UnsupportedModelError(f"no exact law for {model.model_id}")
    if event.last_index > MAX_ENUMERATION_INDEX:
        raise ValueError(f"event reaches index {event.last_index} > {MAX_ENUMERATION_INDEX}")
    event.check_states(model.state_space)
    if isinstance(model, RegimeSwitching):
        return _regime_enumeration(model.params, event)
    if isinstance(model, (IidUniformBernoulli, RandomWalk)):
        # E xi_i(A) = |A| / 2 since E theta_i = 1/2
        return math.prod(len(s) / 2.0 for _, s in event.coords)
    a, b = _upper_counts(event, model.state_space)
    if isinstance(model.prior, UniformPrior):
        return beta_moment(a, b)
    return model.prior.expect(lambda t: t**a * (1.0 - t) ** b)


def joint_table(model: Model, n: int) -> dict[tuple, float]:
    """joint_exact over every point of S^(n+1)."""
    return {
        xs: joint_exact(model, CylinderEvent.point(xs))
        for xs in itertools.product(model.state_space, repeat=n + 1)
    }


def regime_ergodic_limit(params: RegimeParams, f) -> float:
    """Almost-sure limit of the running mean of f(X_k) under regime switching."""
    pi_mu, pi_lam = params.pi
    up = params.mu1 * pi_mu + params.lambda1 * pi_lam
    down = (1.0 - params.mu1) * pi_mu + (1.0 - params.lambda1) * pi_lam
    return float(f(1)) * up + float(f(-1)) * down
