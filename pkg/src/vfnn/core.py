"""Shared domain types, invariant checks and seeded initialization.

Points are plain float64 numpy arrays: a single point has shape ``(n,)`` and
a batch has shape ``(m, n)``.  Every container below stores read-only copies
of its arrays, so instances can be shared freely between threads.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DatasetError",
    "Dataset",
    "FieldParams",
    "FlowConfig",
    "LinearHead",
    "TrainConfig",
    "make_rng",
    "init_params",
    "validate",
]


class DatasetError(ValueError):
    """A dataset violates one of its invariants.

    ``index`` is the offending sample (or ``None`` for whole-set problems).
    """

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


def _frozen(a, dtype=np.float64) -> np.ndarray:
    out = np.array(a, dtype=dtype, copy=True)
    out.flags.writeable = False
    return out


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator keyed by ``seed``.

    PCG64 (O'Neill 2014, numpy's default bit generator) produces the same
    stream on every platform for a given seed, which is all reproducibility
    needs here.
    """
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class FieldParams:
    """Gaussian centers (``M``) and direction vectors (``V``), both ``(S, n)``."""

    centers: np.ndarray
    directions: np.ndarray

    def __post_init__(self):
        c = _frozen(self.centers)
        d = _frozen(self.directions)
        if c.ndim != 2 or c.shape[0] < 1 or c.shape[1] < 1:
            raise ValueError(f"centers must have shape (S, n) with S, n >= 1, got {c.shape}")
        if c.shape != d.shape:
            raise ValueError(f"centers {c.shape} and directions {d.shape} differ in shape")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(d))):
            raise ValueError("field parameters must be finite")
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "directions", d)

    @property
    def num_gaussians(self) -> int:
        return self.centers.shape[0]

    @property
    def dim(self) -> int:
        return self.centers.shape[1]

    def __eq__(self, other):
        if not isinstance(other, FieldParams):
            return NotImplemented
        return np.array_equal(self.centers, other.centers) and np.array_equal(
            self.directions, other.directions
        )


@dataclass(frozen=True)
class FlowConfig:
    """Euler step size ``h`` and number of steps ``N``."""

    step_size: float = 1.0
    num_steps: int = 1

    def __post_init__(self):
        h = float(self.step_size)
        if not np.isfinite(h) or h <= 0:
            raise ValueError(f"step_size must be finite and > 0, got {self.step_size}")
        if int(self.num_steps) != self.num_steps or self.num_steps < 1:
            raise ValueError(f"num_steps must be an integer >= 1, got {self.num_steps}")
        object.__setattr__(self, "step_size", h)
        object.__setattr__(self, "num_steps", int(self.num_steps))

    @property
    def total_time(self) -> float:
        return self.step_size * self.num_steps


@dataclass(frozen=True)
class LinearHead:
    """Logistic head ``sigmoid(w . x + b)``."""

    weights: np.ndarray
    bias: float = 0.0

    def __post_init__(self):
        w = _frozen(self.weights)
        if w.ndim != 1 or w.size < 1:
            raise ValueError(f"weights must be a non-empty vector, got shape {w.shape}")
        b = float(self.bias)
        if not (np.all(np.isfinite(w)) and np.isfinite(b)):
            raise ValueError("head parameters must be finite")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    def __eq__(self, other):
        if not isinstance(other, LinearHead):
            return NotImplemented
        return np.array_equal(self.weights, other.weights) and self.bias == other.bias


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.03
    reg_lambda: float = 0.0
    epochs: int = 10000
    seed: int = 0
    num_gaussians: int = 2
    flow: FlowConfig = field(default_factory=FlowConfig)

    def __post_init__(self):
        # eta = 0 is allowed: it is the fixed-point control run
        if not np.isfinite(self.learning_rate) or self.learning_rate < 0:
            raise ValueError(f"learning_rate must be finite and >= 0, got {self.learning_rate}")
        if not np.isfinite(self.reg_lambda) or self.reg_lambda < 0:
            raise ValueError(f"reg_lambda must be finite and >= 0, got {self.reg_lambda}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.seed < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed}")
        if self.num_gaussians < 1:
            raise ValueError(f"num_gaussians must be >= 1, got {self.num_gaussians}")

    def to_dict(self) -> dict:
        return {
            "learning_rate": self.learning_rate,
            "reg_lambda": self.reg_lambda,
            "epochs": self.epochs,
            "seed": self.seed,
            "num_gaussians": self.num_gaussians,
            "step_size": self.flow.step_size,
            "num_steps": self.flow.num_steps,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        return cls(
            learning_rate=float(d["learning_rate"]),
            reg_lambda=float(d["reg_lambda"]),
            epochs=int(d["epochs"]),
            seed=int(d["seed"]),
            num_gaussians=int(d["num_gaussians"]),
            flow=FlowConfig(float(d["step_size"]), int(d["num_steps"])),
        )


@dataclass(frozen=True, eq=False)
class Dataset:
    """Labelled point cloud.

    Construction only normalizes dtypes; call :func:`validate` to check the
    invariants (the generators and the CSV reader always do).
    """

    points: np.ndarray
    labels: np.ndarray
    name: str = ""

    def __post_init__(self):
        p = _frozen(self.points)
        if p.ndim == 1:
            p = _frozen(p.reshape(-1, 1))
        object.__setattr__(self, "points", p)
        object.__setattr__(self, "labels", _frozen(self.labels, dtype=np.int64))

    def __len__(self):
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def class_counts(self) -> tuple[int, int]:
        return int(np.sum(self.labels == 0)), int(np.sum(self.labels == 1))

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.name == other.name
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.labels, other.labels)
        )


def validate(dataset: Dataset) -> Dataset:
    """Check the dataset invariants; return it unchanged or raise DatasetError."""
    pts, labels = dataset.points, dataset.labels
    if pts.ndim != 2:
        raise DatasetError(f"points must be a 2-D array, got {pts.ndim}-D")
    m, n = pts.shape
    if m < 1:
        raise DatasetError("empty dataset")
    if n < 1:
        raise DatasetError("points must have dimension >= 1")
    if labels.shape != (m,):
        raise DatasetError(f"{labels.size} labels for {m} points")
    bad = np.flatnonzero((labels != 0) & (labels != 1))
    if bad.size:
        i = int(bad[0])
        raise DatasetError(f"non-binary label {labels[i]} at index {i}", index=i)
    bad = np.flatnonzero(~np.all(np.isfinite(pts), axis=1))
    if bad.size:
        i = int(bad[0])
        raise DatasetError(f"non-finite coordinate in point {i}: {pts[i].tolist()}", index=i)
    return dataset


def init_params(n: int, num_gaussians: int, seed: int) -> tuple[FieldParams, LinearHead]:
    """Draw w, V and M i.i.d. from U[0, 1); the bias starts at 0.

    Draw order is fixed (directions, centers, weights) so that a given
    ``(n, S, seed)`` always yields the same bits.
    """
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    if num_gaussians < 1:
        raise ValueError(f"number of Gaussians must be >= 1, got {num_gaussians}")
    rng = make_rng(seed)
    directions = rng.random((num_gaussians, n))
    centers = rng.random((num_gaussians, n))
    weights = rng.random(n)
    return FieldParams(centers, directions), LinearHead(weights, 0.0)
