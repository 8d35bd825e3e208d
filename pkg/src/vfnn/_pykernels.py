"""Pure numpy implementation of the training kernels.

Mirrors ``_ckernels.pyx`` function for function.  Arrays are float64 and
C-contiguous; labels are passed as float64 0/1 values.
"""
import numpy as np

PROB_EPS = 1e-12


def _sigmoid(z):
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def _gaussians(x, C):
    m, n = x.shape
    g = np.empty((m, C.shape[0]))
    for s in range(C.shape[0]):
        d2 = np.zeros(m)
        for j in range(n):
            diff = x[:, j] - C[s, j]
            d2 += diff * diff
        g[:, s] = d2
    np.negative(g, out=g)
    np.exp(g, out=g)
    return g


def forward(X, C, V, h, N):
    """All Euler states (N+1, m, n) and Gaussian activations (N, m, S)."""
    states = [X]
    acts = []
    x = X
    for _ in range(N):
        g = _gaussians(x, C)
        k = np.zeros_like(x)
        for s in range(C.shape[0]):
            k += g[:, s : s + 1] * V[s]
        x = x + h * k
        states.append(x)
        acts.append(g)
    return states, acts


def cost_grad(X, y, C, V, w, b, h, N, lam):
    """Mean BCE + (lam/2)||V||^2 and its gradient w.r.t. (C, V, w, b).

    Returns ``(cost, n_correct, dC, dV, dw, db)``.
    """
    m = X.shape[0]
    states, acts = forward(X, C, V, h, N)
    xN = states[-1]
    z = xN @ w + b
    p = _sigmoid(z)
    pc = np.clip(p, PROB_EPS, 1.0 - PROB_EPS)
    cost = -np.sum(y * np.log(pc) + (1.0 - y) * np.log(1.0 - pc)) / m
    cost += 0.5 * lam * np.sum(V * V)
    correct = int(np.sum((z > 0) == (y > 0.5)))

    r = (p - y) / m
    dw = r @ xN
    db = float(np.sum(r))
    adj = r[:, None] * w[None, :]
    dC = np.zeros_like(C)
    dV = np.zeros_like(V)
    for t in range(N - 1, -1, -1):
        x = states[t]
        g = acts[t]
        upd = np.zeros_like(adj)
        for s in range(C.shape[0]):
            gs = g[:, s]
            dV[s] += h * (gs @ adj)
            coef = 2.0 * h * (adj @ V[s]) * gs
            diff = x - C[s]
            dC[s] += coef @ diff
            upd += coef[:, None] * diff
        adj = adj - upd
    dV += lam * V
    return float(cost), correct, dC, dV, dw, db


def train_loop(X, y, C, V, w, b, h, N, lam, eta, epochs):
    """Full-batch gradient descent.

    Returns ``(costs, accuracies, C, V, w, b, status)``; ``status`` is 0 on
    success and 1 when a non-finite cost or gradient stopped the run, in which
    case the parameters are the last ones with a finite recorded cost.
    """
    # divergence is detected and reported through ``status``
    with np.errstate(all="ignore"):
        return _train_loop(X, y, C, V, w, b, h, N, lam, eta, epochs)


def _train_loop(X, y, C, V, w, b, h, N, lam, eta, epochs):
    m = X.shape[0]
    C, V, w = C.copy(), V.copy(), w.copy()
    b = float(b)
    costs = np.empty(epochs + 1)
    accs = np.empty(epochs + 1)
    prev = None
    for e in range(epochs + 1):
        cost, correct, dC, dV, dw, db = cost_grad(X, y, C, V, w, b, h, N, lam)
        if not np.isfinite(cost):
            if prev is None:
                return costs[:0], accs[:0], C, V, w, b, 1
            C, V, w, b = prev
            return costs[:e], accs[:e], C, V, w, b, 1
        costs[e] = cost
        accs[e] = correct / m
        if e == epochs:
            break
        if not (
            np.isfinite(db)
            and np.all(np.isfinite(dC))
            and np.all(np.isfinite(dV))
            and np.all(np.isfinite(dw))
        ):
            return costs[: e + 1], accs[: e + 1], C, V, w, b, 1
        prev = (C, V, w, b)
        C = C - eta * dC
        V = V - eta * dV
        w = w - eta * dw
        b = b - eta * db
    return costs, accs, C, V, w, b, 0
