"""Experiment configuration: loading, defaults, validation."""

from __future__ import annotations

import copy
import json
import sys
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .models import make_model
from .observables import make_observable
from .rng import parse_seed

EXPERIMENTS = ("trace", "concentration", "figure1", "sv_functional")


class ConfigError(ValueError):
    """Config cannot be parsed or has missing / ill-typed fields."""


def bundled_configs() -> list[str]:
    root = resources.files("pdsim") / "configs"
    return sorted(p.name[: -len(".toml")] for p in root.iterdir() if p.name.endswith(".toml"))


def resolve(path_or_name: str) -> Path | str:
    p = Path(path_or_name)
    if p.exists():
        return p
    if path_or_name in bundled_configs():
        return str(resources.files("pdsim") / "configs" / f"{path_or_name}.toml")
    raise ConfigError(f"no config file or bundled config named {path_or_name!r}")


def load(path_or_name: str) -> dict:
    path = Path(resolve(path_or_name))
    text = path.read_text(encoding="utf-8")
    try:
        if path.suffix == ".json":
            raw = json.loads(text)
        else:
            raw = tomllib.loads(text)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return raw


def _default_checkpoints(horizon: int) -> list[int]:
    cps = [10**k for k in range(2, 19) if 10**k <= horizon]
    return cps or [horizon]


def _int(raw, name, minimum=None):
    value = raw.get(name)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{name} must be >= {minimum}, got {value}")
    return value


def normalize(raw: dict, overrides: dict | None = None) -> dict:
    """Fill defaults and apply CLI overrides. Idempotent."""
    cfg = copy.deepcopy(raw)
    for k, v in (overrides or {}).items():
        if v is not None:
            cfg[k] = v
    experiment = cfg.get("experiment", "trace")
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}; choose from {list(EXPERIMENTS)}")
    if "seed" not in cfg:
        raise ConfigError("seed is required")
    try:
        seed = parse_seed(cfg["seed"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    model = cfg.get("model", {"id": "submartingale_coin"} if experiment == "figure1" else None)
    if isinstance(model, str):
        model = {"id": model}
    if not isinstance(model, dict) or "id" not in model:
        raise ConfigError("model block with an id is required")
    model = {"id": model["id"], "params": dict(model.get("params", {}))}

    defaults_horizon = {"figure1": 21}
    cfg.setdefault("horizon", defaults_horizon.get(experiment, 100_000))
    horizon = _int(cfg, "horizon", 1)
    cfg.setdefault("replications", 1)
    replications = _int(cfg, "replications", 1)

    out = {
        "experiment": experiment,
        "seed": seed,
        "horizon": horizon,
        "replications": replications,
        "model": model,
        "strict": bool(cfg.get("strict", False)),
    }
    if experiment in ("trace", "sv_functional"):
        obs = cfg.get("observable", {"id": "indicator", "state": 1})
        if isinstance(obs, str):
            obs = {"id": obs}
        out["observable"] = dict(obs)
    if experiment == "trace":
        cps = cfg.get("checkpoints", _default_checkpoints(horizon))
        if not isinstance(cps, list) or not all(isinstance(c, int) and not isinstance(c, bool) for c in cps):
            raise ConfigError("checkpoints must be a list of integers")
        out["checkpoints"] = cps
        check = {"gamma": 0.5, "floor": 1e-3, "tolerance": 0.02, "min_fraction": 0.95}
        check.update(cfg.get("check", {}))
        out["check"] = check
    if experiment == "concentration":
        conc = dict(cfg.get("concentration", {}))
        if "t" not in conc:
            raise ConfigError("concentration.t is required")
        conc["t"] = float(conc["t"])
        conc.setdefault("k_sigma", 3.0)
        out["concentration"] = conc
    if experiment == "sv_functional":
        out["direct_draws"] = cfg.get("direct_draws", 100_000)
    outputs = {"traces": True, "reports": True, "paths": False, "figure": experiment == "figure1"}
    outputs.update(cfg.get("outputs", {}))
    out["outputs"] = outputs
    if "testing" in cfg:
        out["testing"] = dict(cfg["testing"])
    return out


def build(cfg: dict):
    """Resolve ids into objects; raises ModelInvariantError before any sampling."""
    model = make_model(cfg["model"]["id"], cfg["model"]["params"])
    observable = None
    if "observable" in cfg:
        try:
            observable = make_observable(cfg["observable"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad observable: {exc}") from exc
    return model, observable


def dumps(cfg: dict) -> str:
    return json.dumps(cfg, indent=2, sort_keys=True) + "\n"
