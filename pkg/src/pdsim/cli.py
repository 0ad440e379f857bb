"""Command-line experiment runner.

Exit codes: 0 success, 2 config error, 3 model invariant violation,
4 check failure in strict mode. Errors are printed to stderr as JSON.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .concentration import ConditionNeverMetError, hoeffding_check, tail_decomposition
from .figure import EmptyPlotError, emit_figure, figure1_rows, render_svg, rows_to_csv
from .models import MODEL_IDS, ModelInvariantError, RegimeSwitching
from .oracle import regime_ergodic_limit
from .rng import ForcedStream, StreamKey, parse_seed
from .slln import (
    CheckpointError,
    gap_decay_check,
    run_traces,
    stabilization,
    sv_functional_estimate,
    traces_to_csv,
)

OUT_DIR_ENV = "PDSIM_OUT_DIR"
DEFAULT_OUT_DIR = "pdsim-out"

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT, EXIT_CHECK = 0, 2, 3, 4


class CheckFailed(RuntimeError):
    pass


def _fail(kind: str, message: str, code: int) -> int:
    print(json.dumps({"error": kind, "message": message, "exit_code": code}, sort_keys=True), file=sys.stderr)
    return code


def _write(out_dir: Path, name: str, text: str) -> None:
    (out_dir / name).write_text(text, encoding="utf-8")


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _run_trace(cfg, model, f, out_dir):
    traces = run_traces(model, f, cfg["horizon"], cfg["checkpoints"], cfg["seed"], cfg["replications"])
    check = cfg["check"]
    report = {
        "model": model.describe(),
        "observable": f.describe(),
        "replications": cfg["replications"],
        "seed": cfg["seed"],
        "terminal_mean_fX": [t.terminal.mean_fX for t in traces],
        "terminal_gap": [t.terminal.gap for t in traces],
    }
    failures = []
    try:
        decay = gap_decay_check(traces, check["gamma"], check["floor"])
        report["gap_decay"] = decay.as_dict()
        report["stabilized"] = stabilization(traces)
        if not decay.passed:
            failures.append("gap_decay")
    except CheckpointError as exc:
        report["gap_decay"] = {"skipped": str(exc)}
    if isinstance(model, RegimeSwitching):
        limit = regime_ergodic_limit(model.params, f)
        within = [abs(t.terminal.mean_fX - limit) <= check["tolerance"] for t in traces]
        fraction = sum(within) / len(within)
        report["ergodic_limit"] = {
            "limit": limit,
            "tolerance": check["tolerance"],
            "fraction_within": fraction,
            "min_fraction": check["min_fraction"],
            "passed": fraction >= check["min_fraction"],
        }
        if fraction < check["min_fraction"]:
            failures.append("ergodic_limit")
    report["passed"] = not failures
    if cfg["outputs"]["traces"]:
        _write(out_dir, "trace.csv", traces_to_csv(traces))
    if cfg["outputs"]["paths"]:
        batch = model.simulate(cfg["horizon"], cfg["seed"], np.arange(cfg["replications"]))
        lines = ["replication,index,x"]
        for r, row in enumerate(batch.points):
            lines.extend(f"{r},{i},{format(float(x), '.17g')}" for i, x in enumerate(row))
        _write(out_dir, "paths.csv", "\n".join(lines) + "\n")
    return report, failures


def _run_concentration(cfg, model, out_dir):
    conc = cfg["concentration"]
    key = StreamKey(cfg["seed"])
    rep = hoeffding_check(model, cfg["horizon"], conc["t"], cfg["replications"], key, strict=cfg["strict"], k=conc["k_sigma"])
    tail = tail_decomposition(model, cfg["horizon"], conc["t"], cfg["replications"], key, k=conc["k_sigma"])
    report = {"hoeffding": rep.as_dict(), "status": rep.status, "tail_decomposition": tail.as_dict()}
    failures = []
    if rep.status == "fail":
        failures.append("hoeffding")
    if not tail.passed:
        failures.append("tail_decomposition")
    report["passed"] = not failures
    return report, failures


def _run_figure1(cfg, out_dir):
    key = StreamKey(cfg["seed"])
    forced = cfg.get("testing", {}).get("force_uniform")
    if forced is not None:
        rows = figure1_rows(key, cfg["horizon"], ForcedStream(forced), ForcedStream(forced))
    else:
        rows = figure1_rows(key, cfg["horizon"])
    data = rows_to_csv(rows)
    _write(out_dir, "figure1.csv", data)
    if cfg["outputs"]["figure"]:
        cols = {c: [r[i] for r in rows] for i, c in enumerate(("n", "theta_n", "coin_outcome", "running_mean"))}
        _write(out_dir, "figure1.svg", render_svg(cols))
    return {"rows": len(rows), "seed": cfg["seed"], "passed": True}, []


def _run_sv(cfg, model, f, out_dir):
    est = sv_functional_estimate(
        model.params, f, cfg["horizon"], StreamKey(cfg["seed"]), cfg["replications"], cfg["direct_draws"]
    )
    report = {
        "path_average": est.path_average,
        "path_average_se": est.path_average_se,
        "direct": est.direct,
        "direct_se": est.direct_se,
        "combined_se": est.combined_se,
        "agree_3sigma": est.agree(3.0),
        "passed": est.agree(3.0),
    }
    return report, ([] if est.agree(3.0) else ["sv_functional"])


def run(config_path: str, overrides: dict | None = None, out_dir: str | None = None) -> int:
    try:
        cfg = cfgmod.normalize(cfgmod.load(config_path), overrides)
    except cfgmod.ConfigError as exc:
        return _fail("config", str(exc), EXIT_CONFIG)
    except OSError as exc:
        return _fail("config", f"cannot read config: {exc}", EXIT_CONFIG)
    try:
        model, f = cfgmod.build(cfg)
    except ModelInvariantError as exc:
        return _fail("model_invariant", str(exc), EXIT_INVARIANT)
    except (cfgmod.ConfigError, KeyError) as exc:
        return _fail("config", str(exc), EXIT_CONFIG)

    out = Path(out_dir or os.environ.get(OUT_DIR_ENV, DEFAULT_OUT_DIR))
    out.mkdir(parents=True, exist_ok=True)
    _write(out, "effective_config.json", cfgmod.dumps(cfg))
    try:
        kind = cfg["experiment"]
        if kind == "trace":
            report, failures = _run_trace(cfg, model, f, out)
        elif kind == "concentration":
            report, failures = _run_concentration(cfg, model, out)
        elif kind == "figure1":
            report, failures = _run_figure1(cfg, out)
        else:
            report, failures = _run_sv(cfg, model, f, out)
    except ConditionNeverMetError as exc:
        return _fail("check_failed", str(exc), EXIT_CHECK)
    except (ValueError, KeyError) as exc:
        return _fail("config", str(exc), EXIT_CONFIG)
    if cfg["outputs"]["reports"]:
        _write(out, "report.json", _dumps(report))
    if failures and cfg["strict"]:
        return _fail("check_failed", f"failed checks: {', '.join(failures)}", EXIT_CHECK)
    return EXIT_OK


def validate(config_path: str, overrides: dict | None = None) -> int:
    try:
        cfg = cfgmod.normalize(cfgmod.load(config_path), overrides)
        cfgmod.build(cfg)
    except ModelInvariantError as exc:
        return _fail("model_invariant", str(exc), EXIT_INVARIANT)
    except (cfgmod.ConfigError, KeyError, OSError) as exc:
        return _fail("config", str(exc), EXIT_CONFIG)
    sys.stdout.write(cfgmod.dumps(cfg))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=parse_seed, help="override seed (decimal or 0x-hex)")
    common.add_argument("--reps", type=int, help="override replication count")
    common.add_argument("--horizon", type=int, help="override horizon N")
    common.add_argument("--out-dir", help=f"output directory (default ${OUT_DIR_ENV} or ./{DEFAULT_OUT_DIR})")
    common.add_argument("--strict", action="store_true", default=None, help="exit 4 when a check fails")

    parser = argparse.ArgumentParser(prog="pdsim", description="Product-disintegration experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", parents=[common], help="run an experiment config")
    p.add_argument("config", help="config file path or bundled config name")
    p = sub.add_parser("validate", parents=[common], help="check a config and print its effective form")
    p.add_argument("config")
    p = sub.add_parser("figure", help="render figure-data CSV as SVG")
    p.add_argument("csv")
    p.add_argument("out")
    sub.add_parser("list-models", help="list model ids and bundled configs")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "list-models":
        for mid in (*MODEL_IDS, "canonical"):
            print(mid)
        print("bundled configs: " + ", ".join(cfgmod.bundled_configs()))
        return EXIT_OK
    if args.command == "figure":
        try:
            emit_figure(args.csv, args.out)
        except (EmptyPlotError, ValueError, OSError) as exc:
            return _fail("figure", str(exc), EXIT_CONFIG)
        return EXIT_OK
    overrides = {"seed": args.seed, "replications": args.reps, "horizon": args.horizon, "strict": args.strict}
    if args.command == "validate":
        return validate(args.config, overrides)
    return run(args.config, overrides, args.out_dir)


if __name__ == "__main__":
    sys.exit(main())
