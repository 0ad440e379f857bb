"""Observables f: S -> R, vectorized over numpy arrays.

``breakpoints`` lists the x-locations where an observable has a jump or a
kink; quadrature over continuous laws splits there.
"""

from __future__ import annotations

import numpy as np


class Observable:
    id = "observable"
    breakpoints: tuple[float, ...] = ()

    def __call__(self, x):
        raise NotImplementedError

    def describe(self) -> dict:
        return {"id": self.id}

    def __repr__(self):
        return f"{type(self).__name__}({self.describe()})"


class Indicator(Observable):
    """f(x) = 1 if x == state else 0."""

    id = "indicator"

    def __init__(self, state=1):
        self.state = state
        self.breakpoints = (float(state),)

    def __call__(self, x):
        return np.where(np.asarray(x) == self.state, 1.0, 0.0)

    def describe(self):
        return {"id": self.id, "state": self.state}


class Above(Observable):
    """f(x) = 1 if x > threshold else 0; the indicator used on continuous state spaces."""

    id = "above"

    def __init__(self, threshold=0.0):
        self.threshold = float(threshold)
        self.breakpoints = (self.threshold,)

    def __call__(self, x):
        return np.where(np.asarray(x, dtype=float) > self.threshold, 1.0, 0.0)

    def describe(self):
        return {"id": self.id, "threshold": self.threshold}


class Identity(Observable):
    id = "identity"

    def __call__(self, x):
        return np.asarray(x, dtype=float) * 1.0


class Square(Observable):
    id = "square"

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return x * x


class Constant(Observable):
    id = "constant"

    def __init__(self, value=1.0):
        self.value = float(value)

    def __call__(self, x):
        return np.full(np.shape(x), self.value)

    def describe(self):
        return {"id": self.id, "value": self.value}


class PiecewiseLinear(Observable):
    """Linear interpolation through ``(xs, ys)``, constant beyond the ends."""

    id = "piecewise_linear"

    def __init__(self, xs, ys):
        xs = [float(v) for v in xs]
        ys = [float(v) for v in ys]
        if len(xs) != len(ys) or len(xs) < 2:
            raise ValueError("piecewise_linear needs matching xs/ys with at least two knots")
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError("piecewise_linear knots must be strictly increasing")
        self.xs, self.ys = xs, ys
        self.breakpoints = tuple(xs)

    def __call__(self, x):
        return np.interp(np.asarray(x, dtype=float), self.xs, self.ys)

    def describe(self):
        return {"id": self.id, "xs": self.xs, "ys": self.ys}


OBSERVABLES = {
    "indicator": Indicator,
    "above": Above,
    "identity": Identity,
    "square": Square,
    "constant": Constant,
    "piecewise_linear": PiecewiseLinear,
}


def make_observable(spec: dict | str) -> Observable:
    if isinstance(spec, str):
        spec = {"id": spec}
    spec = dict(spec)
    name = spec.pop("id", None)
    if name not in OBSERVABLES:
        raise KeyError(f"unknown observable {name!r}; choose from {sorted(OBSERVABLES)}")
    return OBSERVABLES[name](**spec)
