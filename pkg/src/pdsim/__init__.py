"""Simulation and exact-law checks for processes with product disintegrations."""

from .measure import FiniteMeasure, PointMass, PushforwardMeasure
from .models import (
    Canonical,
    ExchangeableBernoulli,
    IidUniformBernoulli,
    LatentPath,
    ObservedPath,
    RandomWalk,
    RegimeParams,
    RegimeSwitching,
    StochasticVolatility,
    SubmartingaleCoin,
    SVParams,
    canonical_disintegration,
    make_model,
)
from .rng import Stream, StreamKey

__version__ = "0.1.0"
