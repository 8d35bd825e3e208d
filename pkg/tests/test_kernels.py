"""The compiled and numpy kernels must agree."""
import os
import subprocess
import sys

import numpy as np
import pytest

from vfnn import _backend, _pykernels
from vfnn.core import make_rng

needs_ext = pytest.mark.skipif("cython" not in _backend.available_backends(), reason="extension not built")


def _problem(seed, m=50, S=3, n=2):
    rng = make_rng(seed)
    X = rng.normal(size=(m, n))
    y = (rng.random(m) < 0.5).astype(float)
    return X, y, rng.random((S, n)), rng.random((S, n)), rng.random(n), float(rng.normal())


@needs_ext
@pytest.mark.parametrize("N,h", [(1, 1.0), (3, 0.3), (5, 0.1)])
def test_cost_grad_agree(N, h):
    ck = _backend.get_kernels("cython")
    args = _problem(N)
    a = _pykernels.cost_grad(*args, h, N, 0.001)
    b = ck.cost_grad(*args, h, N, 0.001)
    assert a[0] == pytest.approx(b[0], rel=1e-13)
    assert a[1] == b[1]
    for u, v in zip(a[2:], b[2:]):
        np.testing.assert_allclose(u, v, rtol=1e-11, atol=1e-16)


@needs_ext
def test_train_loop_agree():
    ck = _backend.get_kernels("cython")
    X, y, C, V, w, b = _problem(7)
    ra = _pykernels.train_loop(X, y, C, V, w, b, 0.5, 2, 0.0005, 0.3, 300)
    rb = ck.train_loop(X, y, C, V, w, b, 0.5, 2, 0.0005, 0.3, 300)
    np.testing.assert_allclose(ra[0], rb[0], rtol=1e-9)
    np.testing.assert_allclose(ra[3], rb[3], rtol=1e-8)
    assert ra[-1] == rb[-1] == 0


def test_train_loop_does_not_mutate_inputs(kernels):
    X, y, C, V, w, b = _problem(1)
    C0, V0, w0 = C.copy(), V.copy(), w.copy()
    kernels.train_loop(X, y, C, V, w, b, 1.0, 1, 0.0, 0.3, 10)
    assert np.array_equal(C, C0) and np.array_equal(V, V0) and np.array_equal(w, w0)


def test_train_loop_abort_keeps_last_finite(kernels):
    X, y, C, V, w, b = _problem(2, m=10)
    out = kernels.train_loop(X, y, C, V * 1e300, w * 1e300, b, 1.0, 1, 0.0, 1e300, 5)
    costs, accs, Cf, Vf, wf, bf, status = out
    assert status == 1
    assert np.all(np.isfinite(costs))
    assert np.all(np.isfinite(Cf)) and np.all(np.isfinite(Vf)) and np.all(np.isfinite(wf))


def test_env_selects_python_backend():
    code = "from vfnn import _backend; print(_backend.BACKEND)"
    env = dict(os.environ, VFNN_BACKEND="python")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_env_rejects_unknown_backend():
    code = "import vfnn"
    env = dict(os.environ, VFNN_BACKEND="fortran")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.returncode != 0
