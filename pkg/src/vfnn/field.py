"""Gaussian-kernel vector field K(x) = sum_i V_i exp(-||x - mu_i||^2)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import FieldParams

__all__ = ["FieldSample", "gaussian", "eval_field", "eval_field_batch", "eval_field_grid", "grid_axes"]


@dataclass(frozen=True)
class FieldSample:
    position: np.ndarray
    velocity: np.ndarray


def _check_dim(x: np.ndarray, n: int):
    if x.shape[-1] != n:
        raise ValueError(f"dimension mismatch: point has {x.shape[-1]} coordinates, field has {n}")


def gaussian(x, mu) -> float:
    """Unit-bandwidth Gaussian bump, exp(-||x - mu||^2)."""
    x = np.asarray(x, dtype=np.float64)
    mu = np.asarray(mu, dtype=np.float64)
    if x.shape != mu.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {mu.shape}")
    d = x - mu
    return float(np.exp(-np.dot(d, d)))


def _gaussians(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """(m, S) matrix of G(x_k, mu_i).

    Squared distances are accumulated coordinate by coordinate so that every
    row is computed by the same sequence of float operations no matter how
    many rows the batch has.
    """
    m, n = points.shape
    out = np.empty((m, centers.shape[0]))
    for i, mu in enumerate(centers):
        d2 = np.zeros(m)
        for j in range(n):
            diff = points[:, j] - mu[j]
            d2 += diff * diff
        out[:, i] = d2
    np.negative(out, out=out)
    np.exp(out, out=out)
    return out


def eval_field_batch(points, theta: FieldParams) -> np.ndarray:
    """Field velocity at every row of an ``(m, n)`` array."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2:
        raise ValueError(f"expected an (m, n) array, got shape {pts.shape}")
    _check_dim(pts, theta.dim)
    g = _gaussians(pts, theta.centers)
    k = np.zeros_like(pts)
    for i in range(theta.num_gaussians):
        k += g[:, i : i + 1] * theta.directions[i]
    return k


def eval_field(x, theta: FieldParams) -> np.ndarray:
    """Field velocity K(x) at a single point."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"expected a single point, got shape {x.shape}")
    return eval_field_batch(x[None, :], theta)[0]


def grid_axes(bounds, resolution: int) -> tuple[np.ndarray, np.ndarray]:
    """Inclusive coordinate axes for a 2-D rectangle ``(xmin, xmax, ymin, ymax)``."""
    xmin, xmax, ymin, ymax = map(float, bounds)
    if resolution < 2:
        raise ValueError(f"resolution must be >= 2, got {resolution}")
    if not (xmax > xmin and ymax > ymin) or not np.all(np.isfinite([xmin, xmax, ymin, ymax])):
        raise ValueError(f"degenerate bounds {bounds}")
    return np.linspace(xmin, xmax, resolution), np.linspace(ymin, ymax, resolution)


def grid_points(bounds, resolution: int) -> np.ndarray:
    """Row-major ``(resolution**2, 2)`` grid; rows vary along y, columns along x."""
    xs, ys = grid_axes(bounds, resolution)
    gx, gy = np.meshgrid(xs, ys)
    return np.column_stack([gx.ravel(), gy.ravel()])


def eval_field_grid(bounds, resolution: int, theta: FieldParams) -> list[FieldSample]:
    if theta.dim != 2:
        raise ValueError("grid evaluation needs a 2-D field")
    pts = grid_points(bounds, resolution)
    vel = eval_field_batch(pts, theta)
    return [FieldSample(p, v) for p, v in zip(pts, vel)]
