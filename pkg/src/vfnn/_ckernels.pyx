# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled training kernels; same API and semantics as ``_pykernels``."""
import numpy as np

from libc.math cimport exp, log, fabs, isfinite

cdef double PROB_EPS = 1e-12


cdef inline double _sigmoid(double z) noexcept nogil:
    cdef double e
    if z >= 0:
        return 1.0 / (1.0 + exp(-z))
    e = exp(z)
    return e / (1.0 + e)


cdef double _cost_grad(
    const double[:, ::1] X, const double[::1] y,
    const double[:, ::1] C, const double[:, ::1] V,
    const double[::1] w, double b, double h, int N, double lam,
    double[:, :, ::1] states, double[:, :, ::1] G, double[:, ::1] adj,
    double[::1] upd,
    double[:, ::1] dC, double[:, ::1] dV, double[::1] dw,
    double* db, long* correct,
) noexcept nogil:
    cdef Py_ssize_t m = X.shape[0], n = X.shape[1], S = C.shape[0]
    cdef Py_ssize_t t, k, s, j
    cdef double d2, diff, v, z, p, pc, yk, r, loss, reg, g, av, coef

    for k in range(m):
        for j in range(n):
            states[0, k, j] = X[k, j]

    for t in range(N):
        for k in range(m):
            for s in range(S):
                d2 = 0.0
                for j in range(n):
                    diff = states[t, k, j] - C[s, j]
                    d2 = d2 + diff * diff
                G[t, k, s] = exp(-d2)
            for j in range(n):
                v = 0.0
                for s in range(S):
                    v = v + G[t, k, s] * V[s, j]
                states[t + 1, k, j] = states[t, k, j] + h * v

    loss = 0.0
    correct[0] = 0
    db[0] = 0.0
    for j in range(n):
        dw[j] = 0.0
    for k in range(m):
        z = b
        for j in range(n):
            z = z + w[j] * states[N, k, j]
        p = _sigmoid(z)
        pc = p
        if pc < PROB_EPS:
            pc = PROB_EPS
        elif pc > 1.0 - PROB_EPS:
            pc = 1.0 - PROB_EPS
        yk = y[k]
        loss -= yk * log(pc) + (1.0 - yk) * log(1.0 - pc)
        if (z > 0) == (yk > 0.5):
            correct[0] += 1
        r = (p - yk) / m
        db[0] += r
        for j in range(n):
            dw[j] += r * states[N, k, j]
            adj[k, j] = r * w[j]
    loss = loss / m
    reg = 0.0
    for s in range(S):
        for j in range(n):
            reg += V[s, j] * V[s, j]
            dC[s, j] = 0.0
            dV[s, j] = 0.0
    loss += 0.5 * lam * reg

    for t in range(N - 1, -1, -1):
        for k in range(m):
            for j in range(n):
                upd[j] = 0.0
            for s in range(S):
                g = G[t, k, s]
                av = 0.0
                for j in range(n):
                    av = av + adj[k, j] * V[s, j]
                    dV[s, j] += h * g * adj[k, j]
                coef = 2.0 * h * av * g
                for j in range(n):
                    diff = states[t, k, j] - C[s, j]
                    dC[s, j] += coef * diff
                    upd[j] += coef * diff
            for j in range(n):
                adj[k, j] = adj[k, j] - upd[j]

    for s in range(S):
        for j in range(n):
            dV[s, j] += lam * V[s, j]
    return loss


def _buffers(Py_ssize_t m, Py_ssize_t n, Py_ssize_t S, int N):
    return (
        np.empty((N + 1, m, n)), np.empty((N, m, S)), np.empty((m, n)), np.empty(n),
        np.empty((S, n)), np.empty((S, n)), np.empty(n),
    )


def cost_grad(X, y, C, V, w, double b, double h, int N, double lam):
    """Mean BCE + (lam/2)||V||^2 and its gradient; returns (cost, n_correct, dC, dV, dw, db)."""
    cdef double db = 0.0
    cdef long correct = 0
    cdef double cost
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    C = np.ascontiguousarray(C, dtype=np.float64)
    V = np.ascontiguousarray(V, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    states, G, adj, upd, dC, dV, dw = _buffers(X.shape[0], X.shape[1], C.shape[0], N)
    cost = _cost_grad(X, y, C, V, w, b, h, N, lam, states, G, adj, upd, dC, dV, dw, &db, &correct)
    return cost, int(correct), dC, dV, dw, db


cdef bint _all_finite(const double[:, ::1] a, const double[:, ::1] c, const double[::1] d, double e) noexcept nogil:
    cdef Py_ssize_t i, j
    if not isfinite(e):
        return False
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            if not (isfinite(a[i, j]) and isfinite(c[i, j])):
                return False
    for i in range(d.shape[0]):
        if not isfinite(d[i]):
            return False
    return True


def train_loop(X, y, C0, V0, w0, double b0, double h, int N, double lam, double eta, long epochs):
    """Full-batch gradient descent; returns (costs, accuracies, C, V, w, b, status)."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t m = X.shape[0], n = X.shape[1]
    C_arr = np.array(C0, dtype=np.float64, order="C")
    V_arr = np.array(V0, dtype=np.float64, order="C")
    w_arr = np.array(w0, dtype=np.float64, order="C")
    cdef Py_ssize_t S = C_arr.shape[0]
    states, G, adj, upd, dC_a, dV_a, dw_a = _buffers(m, n, S, N)
    pC_a, pV_a, pw_a = np.empty_like(C_arr), np.empty_like(V_arr), np.empty_like(w_arr)
    costs_a = np.empty(epochs + 1)
    accs_a = np.empty(epochs + 1)

    cdef const double[:, ::1] Xv = X
    cdef const double[::1] yv = y
    cdef double[:, :, ::1] st = states, Gv = G
    cdef double[:, ::1] adjv = adj
    cdef double[::1] updv = upd
    cdef double[:, ::1] C = C_arr, V = V_arr, dC = dC_a, dV = dV_a, pC = pC_a, pV = pV_a
    cdef double[::1] w = w_arr, dw = dw_a, pw = pw_a, costs = costs_a, accs = accs_a
    cdef double b = b0, pb = b0, db = 0.0, cost
    cdef long correct = 0
    cdef long e, recorded = 0
    cdef int status = 0
    cdef bint have_prev = False
    cdef Py_ssize_t s, j

    with nogil:
        for e in range(epochs + 1):
            cost = _cost_grad(Xv, yv, C, V, w, b, h, N, lam, st, Gv, adjv, updv, dC, dV, dw, &db, &correct)
            if not isfinite(cost):
                status = 1
                if have_prev:
                    C[:, :] = pC
                    V[:, :] = pV
                    w[:] = pw
                    b = pb
                break
            costs[e] = cost
            accs[e] = <double>correct / m
            recorded = e + 1
            if e == epochs:
                break
            if not _all_finite(dC, dV, dw, db):
                status = 1
                break
            pC[:, :] = C
            pV[:, :] = V
            pw[:] = w
            pb = b
            have_prev = True
            for s in range(S):
                for j in range(n):
                    C[s, j] = C[s, j] - eta * dC[s, j]
                    V[s, j] = V[s, j] - eta * dV[s, j]
            for j in range(n):
                w[j] = w[j] - eta * dw[j]
            b = b - eta * db

    return costs_a[:recorded], accs_a[:recorded], C_arr, V_arr, w_arr, b, status
