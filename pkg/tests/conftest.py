import math

import numpy as np
import pytest

from vfnn import _backend
from vfnn.core import Dataset, FieldParams, FlowConfig, LinearHead, make_rng
from vfnn.data import GenSpec, generate
from vfnn.model import ModelState


@pytest.fixture(params=_backend.available_backends())
def kernels(request):
    return _backend.get_kernels(request.param)


@pytest.fixture
def circles():
    return generate(GenSpec("circles", 200, 0.1, 0))


@pytest.fixture
def moons():
    return generate(GenSpec("moons", 200, 0.1, 0))


@pytest.fixture
def tiny_dataset():
    rng = make_rng(11)
    return Dataset(rng.uniform(-1, 2, (8, 2)), (rng.random(8) < 0.5).astype(int), "tiny")


def random_state(seed, S=2, n=2, N=1, h=1.0):
    rng = make_rng(seed)
    theta = FieldParams(rng.random((S, n)), rng.random((S, n)))
    head = LinearHead(rng.random(n), rng.normal())
    return ModelState(theta, head, FlowConfig(h, N))


def reference_euler(x0, centers, directions, total_time, steps):
    """Scalar Euler integrator written without numpy; oracle for flow tests."""
    x = [float(v) for v in x0]
    h = total_time / steps
    cs = [[float(v) for v in c] for c in centers]
    vs = [[float(v) for v in d] for d in directions]
    for _ in range(steps):
        k = [0.0] * len(x)
        for c, v in zip(cs, vs):
            g = math.exp(-sum((xi - ci) ** 2 for xi, ci in zip(x, c)))
            for j in range(len(x)):
                k[j] += v[j] * g
        x = [xi + h * ki for xi, ki in zip(x, k)]
    return np.array(x)
