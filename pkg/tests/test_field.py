import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from vfnn.core import FieldParams, init_params
from vfnn.field import eval_field, eval_field_batch, eval_field_grid, gaussian


def test_gaussian_at_center():
    assert gaussian([0.3, -2.0], [0.3, -2.0]) == 1.0


@pytest.mark.parametrize("x,expected", [((1.0, 0.0), math.exp(-1.0)), ((1.0, 1.0), math.exp(-2.0))])
def test_gaussian_values(x, expected):
    assert gaussian(x, (0.0, 0.0)) == pytest.approx(expected, rel=1e-15)
    assert gaussian(x, (0.0, 0.0)) == pytest.approx(0.36787944 if x == (1.0, 0.0) else 0.13533528, abs=1e-8)


def test_gaussian_dim_mismatch():
    with pytest.raises(ValueError):
        gaussian([0.0, 1.0], [0.0])


def test_field_single_term_at_center():
    theta = FieldParams([[0.4, 0.7]], [[1.0, 0.0]])
    np.testing.assert_array_equal(eval_field([0.4, 0.7], theta), [1.0, 0.0])


def test_field_zero_directions():
    theta = FieldParams(np.random.default_rng(0).random((3, 2)), np.zeros((3, 2)))
    np.testing.assert_array_equal(eval_field([0.1, 5.0], theta), [0.0, 0.0])


def test_field_two_terms():
    theta = FieldParams([[0.0, 0.0], [1.0, 0.0]], [[1.0, 0.0], [0.0, 1.0]])
    k = eval_field([0.0, 0.0], theta)
    assert k[0] == 1.0
    assert k[1] == pytest.approx(math.exp(-1.0), rel=1e-15)


def test_field_dim_mismatch():
    theta, _ = init_params(2, 2, 0)
    with pytest.raises(ValueError):
        eval_field([0.0, 0.0, 0.0], theta)


def test_grid_corners():
    theta, _ = init_params(2, 2, 0)
    samples = eval_field_grid((0, 1, 0, 1), 2, theta)
    pos = [tuple(s.position) for s in samples]
    assert pos == [(0, 0), (1, 0), (0, 1), (1, 1)]


def test_grid_zero_field():
    theta = FieldParams(np.ones((2, 2)), np.zeros((2, 2)))
    assert all(not np.any(s.velocity) for s in eval_field_grid((-1, 1, -1, 1), 5, theta))


@pytest.mark.parametrize("bounds,res", [((0, 0, 0, 1), 4), ((0, 1, 1, 0), 4), ((0, 1, 0, 1), 1)])
def test_grid_rejects(bounds, res):
    theta, _ = init_params(2, 1, 0)
    with pytest.raises(ValueError):
        eval_field_grid(bounds, res, theta)


def test_grid_bound():
    theta = FieldParams(np.random.default_rng(1).normal(size=(3, 2)), np.random.default_rng(2).normal(size=(3, 2)))
    bound = np.sum(np.linalg.norm(theta.directions, axis=1))
    for s in eval_field_grid((-3, 3, -3, 3), 25, theta):
        assert np.linalg.norm(s.velocity) <= bound + 1e-12


finite = st.floats(-5, 5, allow_nan=False)


@given(arrays(np.float64, (3, 2), elements=finite), arrays(np.float64, (3, 2), elements=finite),
       arrays(np.float64, 2, elements=st.floats(-20, 20)))
def test_boundedness(centers, directions, x):
    theta = FieldParams(centers, directions)
    k = eval_field(x, theta)
    assert np.max(np.abs(k)) <= np.sum(np.max(np.abs(directions), axis=1)) * (1 + 1e-12) + 1e-300


def test_decay_far_from_centers():
    theta, _ = init_params(2, 3, 4)
    far = theta.centers.mean(axis=0) + np.array([10.0, 10.0])
    dist = np.linalg.norm(theta.centers - far, axis=1)
    assert dist.min() >= 10
    scale = np.sum(np.linalg.norm(theta.directions, axis=1))
    assert np.linalg.norm(eval_field(far, theta)) < 1e-40 * scale


@given(arrays(np.float64, (2, 2), elements=finite), arrays(np.float64, (2, 2), elements=finite),
       arrays(np.float64, (2, 2), elements=finite), st.floats(-3, 3), st.floats(-3, 3),
       arrays(np.float64, 2, elements=finite))
@settings(max_examples=100)
def test_linearity_in_directions(centers, v1, v2, a, b, x):
    lhs = eval_field(x, FieldParams(centers, a * v1 + b * v2))
    rhs = a * eval_field(x, FieldParams(centers, v1)) + b * eval_field(x, FieldParams(centers, v2))
    scale = (abs(a) * np.abs(v1).sum() + abs(b) * np.abs(v2).sum() + 1.0)
    np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-14 * scale)


def test_finite_differences_converge_second_order():
    theta, _ = init_params(2, 2, 3)
    x = np.array([0.2, 0.6])
    # analytic Jacobian of sum_i V_i exp(-|x-mu_i|^2)
    jac = np.zeros((2, 2))
    for mu, v in zip(theta.centers, theta.directions):
        g = math.exp(-np.sum((x - mu) ** 2))
        jac += np.outer(v, -2 * g * (x - mu))

    def fd(eps):
        cols = [(eval_field(x + eps * e, theta) - eval_field(x - eps * e, theta)) / (2 * eps) for e in np.eye(2)]
        return np.max(np.abs(np.column_stack(cols) - jac))

    e1, e2 = fd(1e-2), fd(5e-3)
    assert 3.5 < e1 / e2 < 4.5


def test_batch_matches_single():
    theta, _ = init_params(2, 3, 1)
    pts = np.random.default_rng(5).normal(size=(17, 2))
    batch = eval_field_batch(pts, theta)
    for p, k in zip(pts, batch):
        assert np.array_equal(eval_field(p, theta), k)
