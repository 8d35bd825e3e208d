"""Figure and table emitters, plus model checkpoints.

Every plot is written twice: ``<stem>.svg`` for viewing and ``<stem>.csv``
with the plotted numbers (floats with 17 significant digits, LF endings),
so any other tool can re-render it.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import Dataset, FieldParams, FlowConfig, LinearHead
from .data import format_float
from .field import eval_field_batch, grid_axes, grid_points
from .flow import streamline, transport_batch
from .model import ModelState, predict, sigmoid
from .svg import CLASS_COLORS, Canvas, prob_color

__all__ = [
    "BoundaryMap",
    "ModelFormatError",
    "ModelVersionError",
    "CHECKPOINT_FORMAT",
    "CHECKPOINT_VERSION",
    "padded_bounds",
    "boundary_values",
    "level_set_points",
    "line_deviation",
    "read_table",
    "export_cost_curves",
    "export_boundary_map",
    "export_field_plot",
    "export_streamlines",
    "export_meshgrid_distortion",
    "export_scatter",
    "save_model",
    "load_model",
]

CHECKPOINT_FORMAT = "vfnn-model"
CHECKPOINT_VERSION = 1
MAX_SVG_VERTICES = 2000


def _write_table(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, (int, np.integer, str)) else format_float(v) for v in row])


def read_table(path) -> tuple[list[str], np.ndarray]:
    """Re-parse a CSV written by this module into (header, float matrix)."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty table")
    header = rows[0]
    body = [r for r in rows[1:] if r]
    for lineno, r in enumerate(body, start=2):
        if len(r) != len(header):
            raise ValueError(f"{path}: line {lineno}: expected {len(header)} columns, got {len(r)}")
    data = np.array([[float(v) for v in r] for r in body], dtype=np.float64).reshape(len(body), len(header))
    return header, data


def padded_bounds(points, pad: float = 0.2):
    """Bounding box of ``points`` grown by ``pad`` of its extent on every side."""
    pts = np.asarray(points, dtype=np.float64)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = np.where(hi - lo > 0, hi - lo, 1.0)
    lo, hi = lo - pad * span, hi + pad * span
    return float(lo[0]), float(hi[0]), float(lo[1]), float(hi[1])


def _stem(path) -> Path:
    p = Path(path)
    return p.with_suffix("") if p.suffix in (".svg", ".csv") else p


def _thin(n: int) -> np.ndarray:
    if n <= MAX_SVG_VERTICES:
        return np.arange(n)
    return np.unique(np.r_[np.linspace(0, n - 1, MAX_SVG_VERTICES).astype(int), n - 1])


def rate_tag(rate: float) -> str:
    return format(rate, "g").replace(".", "p").replace("-", "m")


# --------------------------------------------------------------- cost curves


def export_cost_curves(results, outdir, prefix: str = "cost") -> list[Path]:
    """One panel per learning rate: mean cost with a +/-1 std band.

    ``results`` is a sequence of run groups (one list of RunResult per
    rate).  Writes ``<prefix>_rate_<tag>.{svg,csv}``; the CSV has columns
    ``epoch,mean,std`` with one row per recorded epoch (epochs + 1 rows).
    Runs that aborted early are truncated to the shortest history.
    """
    from .train import aggregate

    groups = [list(g) for g in results]
    if not groups or any(not g for g in groups):
        raise ValueError("need at least one non-empty group of runs")
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for runs in groups:
        rate = runs[0].config.learning_rate
        mean, std = aggregate(runs)
        epochs = np.arange(mean.size)
        stem = outdir / f"{prefix}_rate_{rate_tag(rate)}"
        _write_table(stem.with_suffix(".csv"), ["epoch", "mean", "std"], zip(epochs, mean, std))

        lo, hi = mean - std, mean + std
        ymax = float(np.max(hi)) if np.max(hi) > 0 else 1.0
        ymin = min(0.0, float(np.min(lo)))
        canvas = Canvas((0, max(epochs[-1], 1), ymin, ymax * 1.05 if ymax > ymin else ymin + 1),
                        width=560, height=360, title=f"cost vs epoch, rate {rate:g} ({len(runs)} runs)")
        idx = _thin(mean.size)
        canvas.clip_begin()
        canvas.polygon(np.r_[epochs[idx], epochs[idx][::-1]], np.r_[hi[idx], lo[idx][::-1]], "#9ab8e0", opacity="0.6")
        canvas.polyline(epochs[idx], mean[idx], stroke=CLASS_COLORS[0], width=1.5)
        canvas.clip_end()
        canvas.axes(xlabel="epoch", ylabel="cost")
        canvas.save(stem.with_suffix(".svg"))
        written += [stem.with_suffix(".svg"), stem.with_suffix(".csv")]
    return written


# ------------------------------------------------------------ boundary maps


@dataclass(frozen=True, eq=False)
class BoundaryMap:
    bounds: tuple[float, float, float, float]
    resolution: int
    values: np.ndarray
    space: str

    @property
    def axes(self):
        return grid_axes(self.bounds, self.resolution)


def boundary_values(state: ModelState, space: str, bounds, resolution: int) -> BoundaryMap:
    """Probability grid; ``values[r, c]`` sits at ``(xs[c], ys[r])``."""
    if space not in ("original", "transformed"):
        raise ValueError(f"space must be 'original' or 'transformed', got {space!r}")
    if state.dim != 2:
        raise ValueError("boundary maps need a 2-D model")
    pts = grid_points(bounds, resolution)
    if space == "original":
        p = predict(pts, state)
    else:
        p = sigmoid(pts @ state.head.weights + state.head.bias)
    return BoundaryMap(tuple(map(float, bounds)), resolution, np.asarray(p).reshape(resolution, resolution), space)


def level_set_points(values, xs, ys, level: float = 0.5) -> np.ndarray:
    """Crossings of ``level`` along grid edges, linearly interpolated."""
    v = np.asarray(values, dtype=np.float64) - level
    out = []
    for r in range(v.shape[0]):
        for c in range(v.shape[1]):
            a = v[r, c]
            if c + 1 < v.shape[1]:
                b = v[r, c + 1]
                if (a < 0) != (b < 0):
                    t = a / (a - b)
                    out.append((xs[c] + t * (xs[c + 1] - xs[c]), ys[r]))
            if r + 1 < v.shape[0]:
                b = v[r + 1, c]
                if (a < 0) != (b < 0):
                    t = a / (a - b)
                    out.append((xs[c], ys[r] + t * (ys[r + 1] - ys[r])))
    return np.array(out).reshape(-1, 2)


def line_deviation(points) -> float:
    """Max perpendicular distance of ``points`` from their total-least-squares line."""
    pts = np.asarray(points, dtype=np.float64)
    if len(pts) < 2:
        return 0.0
    centered = pts - pts.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    normal = vt[-1]
    return float(np.max(np.abs(centered @ normal)))


def _draw_map(canvas: Canvas, bmap: BoundaryMap):
    xs, ys = bmap.axes
    dx = (xs[1] - xs[0]) / 2
    dy = (ys[1] - ys[0]) / 2
    for r, y in enumerate(ys):
        for c, x in enumerate(xs):
            canvas.rect(x - dx, y - dy, x + dx, y + dy, prob_color(bmap.values[r, c]), shape_rendering="crispEdges")


def export_boundary_map(state: ModelState, dataset: Dataset, space: str, path, bounds=None, resolution: int = 64) -> BoundaryMap:
    """Color map of the predicted probability with the data overlaid.

    In original space the full model is evaluated on the grid.  In
    transformed space the grid is fed straight to the logistic head and the
    overlaid points are the transported data.  Writes ``<stem>.svg``,
    ``<stem>.csv`` (``x1,x2,p``, row-major, y outer) and
    ``<stem>_points.csv`` (``x1,x2,label``).
    """
    if resolution < 16:
        raise ValueError(f"boundary maps need resolution >= 16, got {resolution}")
    pts = dataset.points if space == "original" else transport_batch(dataset.points, state.theta, state.flow)
    if bounds is None:
        bounds = padded_bounds(pts)
    bmap = boundary_values(state, space, bounds, resolution)
    stem = _stem(path)
    stem.parent.mkdir(parents=True, exist_ok=True)
    grid = grid_points(bounds, resolution)
    _write_table(stem.with_suffix(".csv"), ["x1", "x2", "p"], zip(grid[:, 0], grid[:, 1], bmap.values.ravel()))
    _write_table(Path(f"{stem}_points.csv"), ["x1", "x2", "label"], zip(pts[:, 0], pts[:, 1], dataset.labels.tolist()))

    canvas = Canvas(bounds, title=f"decision map ({space} space)")
    canvas.clip_begin()
    _draw_map(canvas, bmap)
    xs, ys = bmap.axes
    contour = level_set_points(bmap.values, xs, ys)
    for x, y in contour:
        canvas.circle(x, y, r=1.0, fill="#000", stroke="none", width=0)
    for p, lab in zip(pts, dataset.labels):
        canvas.circle(p[0], p[1], fill=CLASS_COLORS[int(lab)])
    canvas.clip_end()
    canvas.axes()
    canvas.save(stem.with_suffix(".svg"))
    return bmap


# ------------------------------------------------------------ field plots


def export_field_plot(theta: FieldParams, bounds, resolution: int, path) -> np.ndarray:
    """Quiver plot of the field on a ``resolution x resolution`` grid.

    Arrow length is proportional to ``||K||``; the longest arrow is drawn at
    0.9 of a grid cell, so lengths are comparable within one file only.
    Writes ``<stem>.svg`` and ``<stem>.csv`` (``x1,x2,k1,k2``).  Returns the
    velocity array.
    """
    if theta.dim != 2:
        raise ValueError("field plots need a 2-D field")
    pts = grid_points(bounds, resolution)
    vel = eval_field_batch(pts, theta)
    stem = _stem(path)
    stem.parent.mkdir(parents=True, exist_ok=True)
    _write_table(stem.with_suffix(".csv"), ["x1", "x2", "k1", "k2"], np.column_stack([pts, vel]))

    canvas = Canvas(bounds, title="vector field")
    cell_px = min(canvas.scale((bounds[1] - bounds[0]) / (resolution - 1), (bounds[3] - bounds[2]) / (resolution - 1)))
    pix = np.column_stack(canvas.scale(vel[:, 0], vel[:, 1]))
    longest = float(np.max(np.hypot(pix[:, 0], pix[:, 1]))) if len(pix) else 0.0
    factor = 0.9 * cell_px / longest if longest > 0 else 0.0
    for p, d in zip(pts, pix * factor):
        canvas.arrow(p[0], p[1], d[0], d[1])
    canvas.clip_begin()
    for mu in theta.centers:
        canvas.circle(mu[0], mu[1], r=3.5, fill="#f1c40f", stroke="#000")
    canvas.clip_end()
    canvas.axes()
    canvas.save(stem.with_suffix(".svg"))
    return vel


def export_streamlines(theta: FieldParams, bounds, seeds_per_axis: int, path, h: float = 0.05,
                       max_steps: int = 1000, stop_speed: float = 1e-6) -> list[np.ndarray]:
    """Streamlines from a regular grid of seeds; CSV columns ``line,index,x1,x2``."""
    seeds = grid_points(bounds, seeds_per_axis)
    lines = [streamline(s, theta, h, max_steps, stop_speed) for s in seeds]
    stem = _stem(path)
    stem.parent.mkdir(parents=True, exist_ok=True)
    _write_table(
        stem.with_suffix(".csv"),
        ["line", "index", "x1", "x2"],
        ((i, k, p[0], p[1]) for i, ln in enumerate(lines) for k, p in enumerate(ln)),
    )
    canvas = Canvas(bounds, title="streamlines")
    canvas.clip_begin()
    for ln in lines:
        if len(ln) > 1:
            canvas.polyline(ln[:, 0], ln[:, 1], stroke="#555", width=0.8)
        canvas.circle(ln[0, 0], ln[0, 1], r=1.2, fill="#555", stroke="none", width=0)
    canvas.clip_end()
    canvas.axes()
    canvas.save(stem.with_suffix(".svg"))
    return lines


def export_meshgrid_distortion(theta: FieldParams, flow: FlowConfig, bounds, resolution: int, path,
                               samples_per_line: int | None = None) -> np.ndarray:
    """Regular grid lines pushed through the flow and drawn as polylines.

    Returns an array ``(2, resolution, samples, 2)``: axis (0 = lines of
    constant x2, 1 = lines of constant x1), line, sample, coordinates.
    CSV columns: ``axis,line,index,x1,x2,t1,t2`` (original and transported).
    """
    xs, ys = grid_axes(bounds, resolution)
    k = samples_per_line or max(4 * resolution, 32)
    fx = np.linspace(xs[0], xs[-1], k)
    fy = np.linspace(ys[0], ys[-1], k)
    orig = np.empty((2, resolution, k, 2))
    for i, y in enumerate(ys):
        orig[0, i, :, 0], orig[0, i, :, 1] = fx, y
    for i, x in enumerate(xs):
        orig[1, i, :, 0], orig[1, i, :, 1] = x, fy
    moved = transport_batch(orig.reshape(-1, 2), theta, flow).reshape(orig.shape)
    stem = _stem(path)
    stem.parent.mkdir(parents=True, exist_ok=True)
    rows = (
        (a, i, j, *orig[a, i, j], *moved[a, i, j])
        for a in range(2) for i in range(resolution) for j in range(k)
    )
    _write_table(stem.with_suffix(".csv"), ["axis", "line", "index", "x1", "x2", "t1", "t2"], rows)
    canvas = Canvas(padded_bounds(moved.reshape(-1, 2), 0.05), title="space distortion")
    for a in range(2):
        for i in range(resolution):
            canvas.polyline(moved[a, i, :, 0], moved[a, i, :, 1], stroke="#34495e", width=0.8)
    canvas.axes()
    canvas.save(stem.with_suffix(".svg"))
    return moved


def export_scatter(points, labels, path, title: str = "", bounds=None):
    """Labelled scatter; CSV columns ``x1,x2,label``."""
    pts = np.asarray(points, dtype=np.float64)
    stem = _stem(path)
    stem.parent.mkdir(parents=True, exist_ok=True)
    _write_table(stem.with_suffix(".csv"), ["x1", "x2", "label"], zip(pts[:, 0], pts[:, 1], np.asarray(labels).tolist()))
    canvas = Canvas(bounds or padded_bounds(pts), title=title)
    for p, lab in zip(pts, labels):
        canvas.circle(p[0], p[1], fill=CLASS_COLORS[int(lab)])
    canvas.axes()
    canvas.save(stem.with_suffix(".svg"))


# ------------------------------------------------------------- checkpoints


class ModelFormatError(ValueError):
    pass


class ModelVersionError(ModelFormatError):
    pass


def save_model(state: ModelState, path, meta: dict | None = None) -> None:
    """Write a JSON checkpoint.

    Floats use Python's shortest round-trip repr, so loading restores every
    parameter bit for bit.  ``meta`` holds optional JSON-serializable
    context (training config, epochs completed).
    """
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "dim": state.dim,
        "num_gaussians": state.theta.num_gaussians,
        "flow": {"step_size": state.flow.step_size, "num_steps": state.flow.num_steps},
        "centers": state.theta.centers.tolist(),
        "directions": state.theta.directions.tolist(),
        "weights": state.head.weights.tolist(),
        "bias": state.head.bias,
        "meta": meta or {},
    }
    text = json.dumps(doc, indent=1, allow_nan=False)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text + "\n")


def load_model(path, with_meta: bool = False):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: malformed checkpoint ({exc})") from None
    if not isinstance(doc, dict) or doc.get("format") != CHECKPOINT_FORMAT:
        raise ModelFormatError(f"{path}: not a {CHECKPOINT_FORMAT} checkpoint")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ModelVersionError(
            f"{path}: unsupported checkpoint version {doc.get('version')!r} (expected {CHECKPOINT_VERSION})"
        )
    try:
        n, S = int(doc["dim"]), int(doc["num_gaussians"])
        centers = np.array(doc["centers"], dtype=np.float64)
        directions = np.array(doc["directions"], dtype=np.float64)
        weights = np.array(doc["weights"], dtype=np.float64)
        if centers.shape != (S, n) or directions.shape != (S, n) or weights.shape != (n,):
            raise ValueError("parameter shapes disagree with dim/num_gaussians")
        state = ModelState(
            FieldParams(centers, directions),
            LinearHead(weights, float(doc["bias"])),
            FlowConfig(float(doc["flow"]["step_size"]), int(doc["flow"]["num_steps"])),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"{path}: invalid checkpoint ({exc})") from None
    meta = doc.get("meta", {})
    return (state, meta) if with_meta else state

