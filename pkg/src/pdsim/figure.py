"""Submartingale sample-path dataset and its SVG rendering.

The SVG is written by hand with fixed formatting so identical data gives
identical bytes.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from .models import SubmartingaleCoin
from .rng import OBSERVED, StreamKey

FIGURE_COLUMNS = ("n", "theta_n", "coin_outcome", "running_mean")

WIDTH, HEIGHT = 640, 400
LEFT, RIGHT, TOP, BOTTOM = 60, 20, 20, 50
THETA_COLOR = "#1f4fd8"
MEAN_COLOR = "#8e2fb0"


class EmptyPlotError(ValueError):
    pass


def figure1_rows(key: StreamKey, points: int = 21, latent_stream=None, observed_stream=None):
    """(n, theta_n, X_n, mean of X_0..X_n) for n = 0..points-1.

    The running mean includes X_n so that every row is defined.
    """
    model = SubmartingaleCoin()
    latent = model.sample_latent(points, latent_stream or key.stream())
    observed = model.sample_observed(latent, observed_stream or key.substream(OBSERVED).stream())
    theta = [m[1] for m in latent.measures]
    x = np.array(observed.points)
    running = np.cumsum(x) / np.arange(1, points + 1)
    return [(n, float(theta[n]), int(x[n]), float(running[n])) for n in range(points)]


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FIGURE_COLUMNS)
    for n, th, x, rm in rows:
        w.writerow([n, format(th, ".17g"), x, format(rm, ".17g")])
    return buf.getvalue()


def read_figure_csv(path) -> dict[str, list[float]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in FIGURE_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise ValueError(f"figure data missing columns {missing}")
        cols = {c: [] for c in FIGURE_COLUMNS}
        for row in reader:
            for c in FIGURE_COLUMNS:
                cols[c].append(float(row[c]))
    return cols


def _xy(n, y, n_max):
    span = max(n_max, 1)
    px = LEFT + (WIDTH - LEFT - RIGHT) * n / span
    py = TOP + (HEIGHT - TOP - BOTTOM) * (1.0 - y)
    return f"{px:.2f},{py:.2f}"


def render_svg(cols: dict[str, list[float]]) -> str:
    n = cols["n"]
    if not n:
        raise EmptyPlotError("figure data has no rows")
    n_max = max(n)
    theta = " ".join(_xy(a, b, n_max) for a, b in zip(n, cols["theta_n"]))
    mean = " ".join(_xy(a, b, n_max) for a, b in zip(n, cols["running_mean"]))
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        '<rect x="0" y="0" width="100%" height="100%" fill="white"/>',
        f'<line x1="{LEFT}" y1="{HEIGHT - BOTTOM}" x2="{WIDTH - RIGHT}" y2="{HEIGHT - BOTTOM}" stroke="black"/>',
        f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{HEIGHT - BOTTOM}" stroke="black"/>',
    ]
    for y in (0.0, 0.25, 0.5, 0.75, 1.0):
        px, py = _xy(0, y, n_max).split(",")
        lines.append(f'<text x="{LEFT - 8}" y="{py}" font-size="11" text-anchor="end" dominant-baseline="middle">{y:.2f}</text>')
    for k in sorted({int(v) for v in n}):
        if k % 5 == 0 or k == n_max:
            px, _ = _xy(k, 0.0, n_max).split(",")
            lines.append(f'<text x="{px}" y="{HEIGHT - BOTTOM + 18}" font-size="11" text-anchor="middle">{k}</text>')
    lines.append(f'<text x="{(LEFT + WIDTH - RIGHT) / 2:.1f}" y="{HEIGHT - 10}" font-size="12" text-anchor="middle">n</text>')
    lines.append(f'<polyline fill="none" stroke="{THETA_COLOR}" stroke-width="2" points="{theta}"/>')
    lines.append(f'<polyline fill="none" stroke="{MEAN_COLOR}" stroke-width="1.5" points="{mean}"/>')
    for a, x in zip(n, cols["coin_outcome"]):
        cx, cy = _xy(a, x, n_max).split(",")
        lines.append(f'<circle cx="{cx}" cy="{cy}" r="4" fill="none" stroke="black"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def emit_figure(csv_path, out_path) -> str:
    svg = render_svg(read_figure_csv(csv_path))
    Path(out_path).write_text(svg, encoding="utf-8")
    return svg
