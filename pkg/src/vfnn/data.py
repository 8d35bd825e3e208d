"""Synthetic 2-D benchmark sets (moons, circles, sin) and CSV I/O."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import Dataset, DatasetError, make_rng, validate

__all__ = ["GenSpec", "generate", "gen_moons", "gen_circles", "gen_sin", "split", "read_csv", "write_csv", "KINDS"]

KINDS = ("moons", "circles", "sin")


@dataclass(frozen=True)
class GenSpec:
    kind: str = "circles"
    samples: int = 200
    noise: float = 0.1
    seed: int = 0
    radius_ratio: float = 0.5
    x_range: tuple[float, float] = (0.0, 2 * math.pi)
    amplitude: float = 1.0
    margin: float = 0.3
    band: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown dataset kind {self.kind!r}; expected one of {', '.join(KINDS)}")
        if self.samples < 2:
            raise ValueError(f"need at least 2 samples, got {self.samples}")
        if not math.isfinite(self.noise) or self.noise < 0:
            raise ValueError(f"noise must be finite and >= 0, got {self.noise}")


def _split_counts(m: int) -> tuple[int, int]:
    return (m + 1) // 2, m // 2


def _finish(points, labels, spec: GenSpec, rng) -> Dataset:
    points = np.asarray(points, dtype=np.float64)
    if spec.noise > 0:
        points = points + rng.normal(scale=spec.noise, size=points.shape)
    return validate(Dataset(points, labels, spec.kind))


def gen_moons(spec: GenSpec) -> Dataset:
    """Two interleaved half circles; class 0 is the upper arc."""
    if spec.kind != "moons":
        raise ValueError(f"gen_moons got a {spec.kind!r} spec")
    rng = make_rng(spec.seed)
    n0, n1 = _split_counts(spec.samples)
    t0 = np.linspace(0, math.pi, n0)
    t1 = np.linspace(0, math.pi, n1)
    upper = np.column_stack([np.cos(t0), np.sin(t0)])
    lower = np.column_stack([1 - np.cos(t1), 0.5 - np.sin(t1)])
    labels = np.r_[np.zeros(n0, dtype=int), np.ones(n1, dtype=int)]
    return _finish(np.vstack([upper, lower]), labels, spec, rng)


def gen_circles(spec: GenSpec) -> Dataset:
    """Unit circle (class 0) around a concentric inner circle (class 1).

    Each class gets evenly spaced angles, visited in a seed-dependent order.
    """
    if spec.kind != "circles":
        raise ValueError(f"gen_circles got a {spec.kind!r} spec")
    if not 0 < spec.radius_ratio < 1:
        raise ValueError(f"radius_ratio must lie in (0, 1), got {spec.radius_ratio}")
    rng = make_rng(spec.seed)
    n0, n1 = _split_counts(spec.samples)
    a0 = rng.permutation(np.linspace(0, 2 * math.pi, n0, endpoint=False))
    a1 = rng.permutation(np.linspace(0, 2 * math.pi, n1, endpoint=False))
    outer = np.column_stack([np.cos(a0), np.sin(a0)])
    inner = spec.radius_ratio * np.column_stack([np.cos(a1), np.sin(a1)])
    labels = np.r_[np.zeros(n0, dtype=int), np.ones(n1, dtype=int)]
    return _finish(np.vstack([outer, inner]), labels, spec, rng)


def gen_sin(spec: GenSpec) -> Dataset:
    """Points above/below ``amplitude * sin(x)``, separated by a clear band.

    Class 1 lies between ``margin`` and ``margin + band`` above the curve,
    class 0 the same distance below it.
    """
    if spec.kind != "sin":
        raise ValueError(f"gen_sin got a {spec.kind!r} spec")
    if spec.margin >= spec.amplitude:
        raise ValueError(f"margin {spec.margin} must be smaller than amplitude {spec.amplitude}")
    if spec.margin < 0 or spec.band < 0:
        raise ValueError("margin and band must be non-negative")
    lo, hi = spec.x_range
    if not hi > lo:
        raise ValueError(f"empty x range {spec.x_range}")
    rng = make_rng(spec.seed)
    n0, n1 = _split_counts(spec.samples)
    x = rng.uniform(lo, hi, spec.samples)
    offset = spec.margin + spec.band * rng.random(spec.samples)
    labels = np.r_[np.zeros(n0, dtype=int), np.ones(n1, dtype=int)]
    sign = np.where(labels == 1, 1.0, -1.0)
    y = spec.amplitude * np.sin(x) + sign * offset
    return _finish(np.column_stack([x, y]), labels, spec, rng)


_GENERATORS = {"moons": gen_moons, "circles": gen_circles, "sin": gen_sin}


def generate(spec: GenSpec) -> Dataset:
    return _GENERATORS[spec.kind](spec)


def split(dataset: Dataset, holdout: float, seed: int = 0) -> tuple[Dataset, Dataset | None]:
    """Random train/holdout partition; ``holdout=0`` returns the set untouched."""
    if not 0 <= holdout < 1:
        raise ValueError(f"holdout fraction must be in [0, 1), got {holdout}")
    k = int(round(holdout * len(dataset)))
    if k == 0:
        return dataset, None
    if k >= len(dataset):
        raise ValueError("holdout leaves no training samples")
    order = make_rng(seed).permutation(len(dataset))
    test, train = order[:k], order[k:]
    return (
        Dataset(dataset.points[train], dataset.labels[train], dataset.name),
        Dataset(dataset.points[test], dataset.labels[test], dataset.name + "-holdout"),
    )


def format_float(v: float) -> str:
    return format(float(v), ".17g")


def write_csv(dataset: Dataset, path) -> None:
    """Header ``x1,...,xn,label``; 17 significant digits; LF line endings."""
    validate(dataset)
    n = dataset.dim
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{j + 1}" for j in range(n)] + ["label"])
        for p, lab in zip(dataset.points, dataset.labels):
            w.writerow([format_float(v) for v in p] + [int(lab)])


def read_csv(path, name: str | None = None) -> Dataset:
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DatasetError(f"{path}: empty file")
    header = rows[0]
    n = len(header) - 1
    if n < 1 or header[-1].strip() != "label":
        raise DatasetError(f"{path}: header must be x1,...,xn,label; got {','.join(header)}")
    points, labels = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != n + 1:
            raise DatasetError(f"{path}: line {lineno}: expected {n + 1} columns, got {len(row)}")
        try:
            coords = [float(v) for v in row[:n]]
        except ValueError:
            raise DatasetError(f"{path}: line {lineno}: non-numeric coordinate") from None
        if row[n].strip() not in ("0", "1"):
            raise DatasetError(f"{path}: line {lineno}: invalid label {row[n]!r}")
        points.append(coords)
        labels.append(int(row[n]))
    if not points:
        raise DatasetError(f"{path}: empty dataset")
    ds = Dataset(np.array(points), np.array(labels), name if name is not None else path.stem)
    try:
        return validate(ds)
    except DatasetError as exc:
        line = "" if exc.index is None else f" (line {exc.index + 2})"
        raise DatasetError(f"{path}: {exc}{line}", exc.index) from None
