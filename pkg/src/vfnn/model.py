"""Forward pass, cost and gradients of the flow + logistic classifier."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import _backend
from .core import Dataset, FieldParams, FlowConfig, LinearHead
from .field import gaussian
from .flow import transport_batch

__all__ = [
    "ModelState",
    "Gradients",
    "GradientError",
    "sigmoid",
    "predict",
    "cost",
    "grad_analytic_n1",
    "grad_backprop",
    "grad_numeric",
    "relative_error",
    "compare_gradients",
    "cost_and_grad",
]

PROB_EPS = 1e-12
_P_MIN = np.nextafter(0.0, 1.0)
_P_MAX = np.nextafter(1.0, 0.0)


class GradientError(FloatingPointError):
    pass


@dataclass(frozen=True, eq=False)
class ModelState:
    theta: FieldParams
    head: LinearHead
    flow: FlowConfig = field(default_factory=FlowConfig)

    def __post_init__(self):
        if self.head.weights.size != self.theta.dim:
            raise ValueError(
                f"head has {self.head.weights.size} weights but the field is {self.theta.dim}-D"
            )

    @property
    def dim(self) -> int:
        return self.theta.dim

    def __eq__(self, other):
        if not isinstance(other, ModelState):
            return NotImplemented
        return self.theta == other.theta and self.head == other.head and self.flow == other.flow

    def flat(self) -> np.ndarray:
        """Parameters as one vector: centers, directions, weights, bias."""
        return np.concatenate(
            [self.theta.centers.ravel(), self.theta.directions.ravel(), self.head.weights, [self.head.bias]]
        )

    def with_flat(self, vec) -> "ModelState":
        S, n = self.theta.centers.shape
        vec = np.asarray(vec, dtype=np.float64)
        c = vec[: S * n].reshape(S, n)
        d = vec[S * n : 2 * S * n].reshape(S, n)
        w = vec[2 * S * n : 2 * S * n + n]
        return replace(self, theta=FieldParams(c, d), head=LinearHead(w, vec[-1]))


@dataclass(frozen=True, eq=False)
class Gradients:
    d_centers: np.ndarray
    d_directions: np.ndarray
    d_weights: np.ndarray
    d_bias: float

    def flat(self) -> np.ndarray:
        return np.concatenate(
            [self.d_centers.ravel(), self.d_directions.ravel(), self.d_weights, [self.d_bias]]
        )

    @classmethod
    def from_flat(cls, vec, S: int, n: int) -> "Gradients":
        vec = np.asarray(vec, dtype=np.float64)
        return cls(
            vec[: S * n].reshape(S, n),
            vec[S * n : 2 * S * n].reshape(S, n),
            vec[2 * S * n : 2 * S * n + n].copy(),
            float(vec[-1]),
        )


def sigmoid(z):
    """Logistic function, branching on sign so neither side overflows.

    The result is kept strictly inside (0, 1) even where the exact value
    rounds to an endpoint.
    """
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(-np.abs(z))
    out = np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    out = np.clip(out, _P_MIN, _P_MAX)
    return float(out) if out.ndim == 0 else out


def predict(x, state: ModelState):
    """Class-1 probability for one point ``(n,)`` or a batch ``(m, n)``."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    pts = x[None, :] if single else x
    if pts.shape[-1] != state.dim:
        raise ValueError(f"dimension mismatch: points are {pts.shape[-1]}-D, model is {state.dim}-D")
    xn = transport_batch(pts, state.theta, state.flow)
    # row-wise sum keeps batch and single-point results bit-identical
    p = sigmoid(np.sum(xn * state.head.weights, axis=1) + state.head.bias)
    return float(p[0]) if single else p


def _bce(p, y):
    pc = np.clip(p, PROB_EPS, 1.0 - PROB_EPS)
    return -(y * np.log(pc) + (1.0 - y) * np.log(1.0 - pc))


def cost(dataset: Dataset, state: ModelState, lam: float = 0.0) -> float:
    """Mean binary cross-entropy plus ``lam/2 * sum_i ||V_i||^2``."""
    p = predict(dataset.points, state)
    y = dataset.labels.astype(np.float64)
    V = state.theta.directions
    return float(np.mean(_bce(p, y)) + 0.5 * lam * np.sum(V * V))


def grad_analytic_n1(x, y: int, state: ModelState, lam: float = 0.0, eta: float | None = None) -> Gradients:
    """Closed-form per-sample gradient for the single unit step (N = 1, h = 1).

    The center/direction gradients are

        dC/dmu_{j,i} = 2 (p - y) G(x, mu_i) (x_j - mu_{j,i}) sum_k w_k V_{k,i}
        dC/dV_{j,i}  = (p - y) G(x, mu_i) w_j + lam V_{j,i}

    Passing ``eta`` scales the regularization term to ``eta * lam * V``,
    i.e. the gradient already multiplied into the update step; the default
    is the true derivative of the regularized cost.
    """
    if state.flow.num_steps != 1 or state.flow.step_size != 1.0:
        raise ValueError(f"closed-form gradients need N=1, h=1, got {state.flow}")
    x = np.asarray(x, dtype=np.float64)
    C, V = state.theta.centers, state.theta.directions
    w, b = state.head.weights, state.head.bias
    g = np.array([gaussian(x, mu) for mu in C])
    xn = x + g @ V
    err = sigmoid(xn @ w + b) - y
    reg = lam if eta is None else eta * lam
    d_centers = 2.0 * err * (g * (V @ w))[:, None] * (x[None, :] - C)
    d_directions = err * g[:, None] * w[None, :] + reg * V
    return Gradients(d_centers, d_directions, err * xn, float(err))


def _kernel_args(dataset: Dataset, state: ModelState):
    return (
        dataset.points,
        dataset.labels.astype(np.float64),
        state.theta.centers,
        state.theta.directions,
        state.head.weights,
        state.head.bias,
        state.flow.step_size,
        state.flow.num_steps,
    )


def cost_and_grad(dataset: Dataset, state: ModelState, lam: float = 0.0, kernels=None):
    """``(cost, n_correct, Gradients)`` in one fused forward/backward pass."""
    k = kernels or _backend.kernels
    # non-finite results are reported by the callers
    with np.errstate(all="ignore"):
        c, correct, dC, dV, dw, db = k.cost_grad(*_kernel_args(dataset, state), lam)
    return c, correct, Gradients(dC, dV, dw, float(db))


def grad_backprop(dataset: Dataset, state: ModelState, lam: float = 0.0, kernels=None) -> Gradients:
    """Batch-mean gradient, back-propagated through all N Euler steps."""
    _, _, g = cost_and_grad(dataset, state, lam, kernels)
    blocks = {"centers": g.d_centers, "directions": g.d_directions, "weights": g.d_weights}
    for name, arr in blocks.items():
        if not np.all(np.isfinite(arr)):
            raise GradientError(f"non-finite gradient in the {name} block")
    if not np.isfinite(g.d_bias):
        raise GradientError("non-finite gradient for the bias")
    return g


def grad_numeric(dataset: Dataset, state: ModelState, lam: float = 0.0, probe: float = 1e-6, cost_fn=None) -> Gradients:
    """Central finite differences of the cost over every scalar parameter."""
    if not probe > 0:
        raise ValueError(f"probe must be > 0, got {probe}")
    f = cost_fn or cost
    base = state.flat()
    out = np.empty_like(base)
    for i in range(base.size):
        up = base.copy()
        dn = base.copy()
        up[i] += probe
        dn[i] -= probe
        out[i] = (f(dataset, state.with_flat(up), lam) - f(dataset, state.with_flat(dn), lam)) / (2 * probe)
    S, n = state.theta.centers.shape
    return Gradients.from_flat(out, S, n)


def relative_error(a, b, atol: float = 0.0) -> np.ndarray:
    """Elementwise ``|a-b| / max(|a|,|b|)``; entries within ``atol`` count as 0."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    diff = np.abs(a - b)
    scale = np.maximum(np.abs(a), np.abs(b))
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(scale > 0, diff / scale, 0.0)
    return np.where(diff <= atol, 0.0, rel)


def compare_gradients(a, b, rtol: float = 1e-5, atol: float = 1e-8) -> tuple[float, float, bool]:
    """``(max_rel, max_abs, ok)`` for a gradient ``a`` against a reference ``b``.

    Entries with ``|b| > atol`` must satisfy ``|a-b| / |b| <= rtol``; the
    rest must satisfy ``|a-b| <= atol``.  ``max_rel`` covers the former.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    diff = np.abs(a - b)
    big = np.abs(b) > atol
    rel = diff[big] / np.abs(b[big])
    max_rel = float(rel.max()) if rel.size else 0.0
    ok = bool(np.all(rel <= rtol) and np.all(diff[~big] <= atol))
    return max_rel, float(diff.max()) if diff.size else 0.0, ok
