"""Fixed-step Euler transport along the field, plus streamline tracing."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import FieldParams, FlowConfig
from .field import eval_field_batch

__all__ = ["FlowDivergence", "Trajectory", "euler_step", "transport", "transport_batch", "streamline"]


class FlowDivergence(FloatingPointError):
    """Transport produced a non-finite coordinate."""

    def __init__(self, message: str, step: int | None = None, index: int | None = None):
        super().__init__(message)
        self.step = step
        self.index = index


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States ``X_0 .. X_N`` of one transported point."""

    states: np.ndarray
    config: FlowConfig
    theta: FieldParams

    @property
    def endpoint(self) -> np.ndarray:
        return self.states[-1]

    def residuals(self) -> np.ndarray:
        """Max-abs deviation of each stored step from a recomputed Euler step."""
        h = self.config.step_size
        res = [
            np.max(np.abs(self.states[i + 1] - euler_step(self.states[i], self.theta, h)))
            for i in range(len(self.states) - 1)
        ]
        return np.array(res)


def _step_batch(pts: np.ndarray, theta: FieldParams, h: float) -> np.ndarray:
    # overflow surfaces as FlowDivergence from the callers
    with np.errstate(over="ignore", invalid="ignore"):
        return pts + h * eval_field_batch(pts, theta)


def euler_step(x, theta: FieldParams, h: float) -> np.ndarray:
    """One explicit Euler step, ``x + h K(x)``."""
    x = np.asarray(x, dtype=np.float64)
    if not np.isfinite(h):
        raise ValueError(f"step size must be finite, got {h}")
    out = _step_batch(x[None, :], theta, h)[0]
    if not np.all(np.isfinite(out)):
        raise FlowDivergence(f"non-finite Euler step from {x.tolist()}")
    return out


def transport(x0, theta: FieldParams, flow: FlowConfig) -> Trajectory:
    x = np.asarray(x0, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"expected a single point, got shape {x.shape}")
    states = np.empty((flow.num_steps + 1, x.size))
    states[0] = x
    for i in range(flow.num_steps):
        nxt = _step_batch(states[i][None, :], theta, flow.step_size)[0]
        if not np.all(np.isfinite(nxt)):
            raise FlowDivergence(f"transport diverged at step {i + 1}", step=i + 1, index=0)
        states[i + 1] = nxt
    states.flags.writeable = False
    return Trajectory(states, flow, theta)


def transport_batch(points, theta: FieldParams, flow: FlowConfig) -> np.ndarray:
    """Final Euler states ``X_N`` for every row of ``points``."""
    pts = np.array(points, dtype=np.float64)
    if pts.size == 0:
        return pts.reshape(0, theta.dim)
    if pts.ndim != 2:
        raise ValueError(f"expected an (m, n) array, got shape {pts.shape}")
    for i in range(flow.num_steps):
        pts = _step_batch(pts, theta, flow.step_size)
        bad = np.flatnonzero(~np.all(np.isfinite(pts), axis=1))
        if bad.size:
            raise FlowDivergence(
                f"transport diverged at step {i + 1} for point {int(bad[0])}",
                step=i + 1,
                index=int(bad[0]),
            )
    return pts


def streamline(x0, theta: FieldParams, h: float = 0.05, max_steps: int = 1000, stop_speed: float = 1e-6) -> np.ndarray:
    """Euler polyline from ``x0``.

    Tracing stops after ``max_steps`` steps, or as soon as the local speed
    ``||K||`` drops below ``stop_speed``; the returned array always starts
    with ``x0`` (so a stagnant start yields a single point).
    """
    if not h > 0:
        raise ValueError(f"h must be > 0, got {h}")
    if max_steps < 1:
        raise ValueError(f"max_steps must be >= 1, got {max_steps}")
    if stop_speed < 0:
        raise ValueError(f"stop_speed must be >= 0, got {stop_speed}")
    x = np.asarray(x0, dtype=np.float64)
    path = [x]
    for i in range(max_steps):
        k = eval_field_batch(x[None, :], theta)[0]
        if np.linalg.norm(k) < stop_speed:
            break
        x = x + h * k
        if not np.all(np.isfinite(x)):
            raise FlowDivergence(f"streamline diverged at step {i + 1}", step=i + 1)
        path.append(x)
    return np.array(path)
