import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polarflow.errors import DimensionMismatch, NegativeDeterminant, Singular
from polarflow.geometry import (
    MongeInstance,
    congruence_push,
    cost_j,
    cost_j_monte_carlo,
    distance,
    fiber_residual,
    in_generalized_orthogonal,
    metric_g,
    random_isotropy_generator,
    tangent_split,
)
from polarflow.matcore import mat_exp

from conftest import random_det_positive, random_spd, rotation

SWAP = np.array([[0.0, 1.0], [1.0, 0.0]])


def hand_cost(a, sigma0):
    # E|x - Ax|^2 for x ~ N(0, S0) written out entrywise: sum_ij S0_ij [(I-A)^T (I-A)]_ji
    n = len(a)
    d = [[(1.0 if i == j else 0.0) - a[i][j] for j in range(n)] for i in range(n)]
    dtd = [[sum(d[k][i] * d[k][j] for k in range(n)) for j in range(n)] for i in range(n)]
    return sum(sigma0[i][j] * dtd[j][i] for i in range(n) for j in range(n))


def test_cost_examples():
    assert cost_j(np.eye(3), random_spd(np.random.default_rng(0), 3)) == 0.0
    assert cost_j(2 * np.eye(2), np.eye(2)) == pytest.approx(2.0)
    sigma0 = np.diag([2.0, 1.0])
    assert hand_cost(SWAP.tolist(), sigma0.tolist()) == pytest.approx(6.0)
    assert cost_j(SWAP, sigma0) == pytest.approx(6.0, rel=1e-15)


def test_cost_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        cost_j(np.eye(2), np.eye(3))


def test_monte_carlo_identity_is_exact():
    est, se = cost_j_monte_carlo(np.eye(2), np.diag([2.0, 1.0]), 1000, seed=1)
    assert est == 0.0 and se == 0.0


@pytest.mark.parametrize(
    "a, sigma0, expected",
    [(np.zeros((2, 2)), np.eye(2), 2.0), (SWAP, np.diag([2.0, 1.0]), 6.0)],
)
def test_monte_carlo_examples(a, sigma0, expected):
    est, se = cost_j_monte_carlo(a, sigma0, 10**6, seed=7)
    assert abs(est - expected) <= 3 * se


def test_monte_carlo_is_deterministic():
    a = [[0.5, 1.0], [0.0, 2.0]]
    assert cost_j_monte_carlo(a, np.eye(2), 1000, 3) == cost_j_monte_carlo(a, np.eye(2), 1000, 3)
    assert cost_j_monte_carlo(a, np.eye(2), 1000, 3) != cost_j_monte_carlo(a, np.eye(2), 1000, 4)


def test_congruence_examples():
    s = random_spd(np.random.default_rng(1), 3)
    np.testing.assert_allclose(congruence_push(np.eye(3), s), s)
    np.testing.assert_array_equal(congruence_push(np.diag([2.0, 1.0]), np.eye(2)), np.diag([4.0, 1.0]))
    np.testing.assert_array_equal(congruence_push([[1.0, 1.0], [0.0, 1.0]], np.eye(2)), [[2.0, 1.0], [1.0, 1.0]])
    with pytest.raises(Singular):
        congruence_push([[1.0, 2.0], [2.0, 4.0]], np.eye(2))


def test_instance_invariants(rng):
    a = random_det_positive(rng, 3)
    s0 = random_spd(rng, 3)
    inst = MongeInstance(s0, a)
    s1 = a @ s0 @ a.T
    assert np.linalg.norm(inst.sigma1 - s1) <= 1e-10 * np.linalg.norm(s1)
    with pytest.raises(ValueError):
        inst.a[0, 0] = 1.0  # read-only
    with pytest.raises(NegativeDeterminant):
        MongeInstance(np.eye(2), [[0.0, 1.0], [1.0, 0.0]])
    MongeInstance(np.eye(2), [[0.0, 1.0], [1.0, 0.0]], allow_negative_det=True)
    with pytest.raises(Singular):
        MongeInstance(np.eye(2), [[1.0, 1.0], [1.0, 1.0]])


def test_fiber_residual_examples(rng):
    s0 = random_spd(rng, 3)
    inst = MongeInstance(s0, random_det_positive(rng, 3))
    assert fiber_residual(inst.a, inst) <= 1e-12
    q = mat_exp(random_isotropy_generator(s0, seed=5))
    assert fiber_residual(inst.a @ q, inst) <= 1e-10
    inst2 = MongeInstance(np.eye(2), np.diag([2.0, 1.0]))
    assert fiber_residual(np.eye(2), inst2) == pytest.approx(3 / math.sqrt(17), rel=1e-14)


def test_metric_examples():
    assert metric_g(np.eye(2), np.eye(2), np.eye(2), np.eye(2)) == 2.0
    assert metric_g(np.eye(2), np.eye(2), np.eye(2), np.diag([2.0, 1.0])) == 3.0
    assert metric_g(np.eye(2), [[0, 1], [0, 0]], [[0, 0], [1, 0]], np.eye(2)) == 0.0


def test_distance_examples(rng):
    a = rng.normal(size=(3, 3))
    s0 = random_spd(rng, 3)
    assert distance(a, a, s0) == 0.0
    assert distance(np.eye(2), 2 * np.eye(2), np.eye(2)) == pytest.approx(math.sqrt(2))
    assert distance(np.eye(2), SWAP, np.diag([2.0, 1.0])) == pytest.approx(math.sqrt(6))


@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_cost_is_squared_distance(seed, n):
    r = np.random.default_rng(seed)
    a, s0 = r.normal(size=(n, n)), random_spd(r, n)
    assert cost_j(a, s0) == pytest.approx(distance(np.eye(n), a, s0) ** 2, rel=1e-12)
    b = r.normal(size=(n, n))
    assert distance(a, b, s0) == pytest.approx(distance(b, a, s0), rel=1e-12)


@given(st.integers(0, 2**32 - 1), st.integers(2, 4))
def test_metric_right_invariance(seed, n):
    r = np.random.default_rng(seed)
    s0 = random_spd(r, n)
    a, x, y = r.normal(size=(3, n, n))
    q = mat_exp(random_isotropy_generator(s0, seed))
    assert in_generalized_orthogonal(q, s0, 1e-10)
    g1 = metric_g(a, x, y, s0)
    g2 = metric_g(a @ q, x @ q, y @ q, s0)
    assert g2 == pytest.approx(g1, rel=1e-9, abs=1e-9 * np.linalg.norm(x) * np.linalg.norm(y))
    assert metric_g(a, x, x, s0) > 0


@given(st.integers(0, 2**32 - 1), st.integers(2, 4))
def test_fiber_isomorphism(seed, n):
    r = np.random.default_rng(seed)
    s0 = random_spd(r, n)
    inst = MongeInstance(s0, random_det_positive(r, n))
    b = inst.a @ mat_exp(random_isotropy_generator(s0, seed + 1))
    assert fiber_residual(b, inst) <= 1e-10
    assert in_generalized_orthogonal(np.linalg.inv(inst.a) @ b, s0, 1e-8)


def test_orthogonal_membership():
    assert in_generalized_orthogonal(np.eye(2), np.eye(2))
    assert in_generalized_orthogonal(rotation(math.pi / 3), np.eye(2))
    assert not in_generalized_orthogonal(2 * np.eye(2), np.eye(2))


def test_tangent_split_examples(rng):
    a = random_det_positive(rng, 3)
    s0 = random_spd(rng, 3)
    g = rng.normal(size=(3, 3))
    u = g + g.T
    ts = tangent_split(u @ a, a, s0)
    np.testing.assert_allclose(ts.vertical_coeff, 0, atol=1e-9 * np.linalg.norm(u))
    np.testing.assert_allclose(ts.horizontal_coeff, u, atol=1e-9 * np.linalg.norm(u))

    m = rng.normal(size=(2, 2))
    ts = tangent_split(m, np.eye(2), np.eye(2))
    np.testing.assert_allclose(ts.vertical_coeff, (m - m.T) / 2, atol=1e-15)
    np.testing.assert_allclose(ts.horizontal_coeff, (m + m.T) / 2, atol=1e-15)

    # a = I and S0 = diag(2, 1) give S = diag(2, 1) and M = adot
    m = np.array([[0.0, 1.0], [0.0, 0.0]])
    lam = [2.0, 1.0]
    rhs = m @ np.diag(lam) + np.diag(lam) @ m.T
    u = np.array([[rhs[i, j] / (lam[i] + lam[j]) for j in range(2)] for i in range(2)])
    np.testing.assert_allclose(u, [[0, 1 / 3], [1 / 3, 0]])
    ts = tangent_split(m, np.eye(2), np.diag(lam))
    np.testing.assert_allclose(ts.horizontal_coeff, u, atol=1e-15)
    np.testing.assert_allclose(ts.vertical_coeff, m - u, atol=1e-15)
    np.testing.assert_allclose(ts.vertical_coeff, [[0, 2 / 3], [-1 / 3, 0]], atol=1e-15)
    x = ts.vertical_coeff @ ts.sigma
    np.testing.assert_allclose(x, -x.T, atol=1e-15)


@given(st.integers(0, 2**32 - 1), st.integers(2, 4))
def test_tangent_split_properties(seed, n):
    r = np.random.default_rng(seed)
    s0 = random_spd(r, n)
    a = random_det_positive(r, n)
    adot = r.normal(size=(n, n))
    v, u, _, s = tangent_split(adot, a, s0)
    m = adot @ np.linalg.inv(a)
    scale = np.linalg.norm(m)
    assert np.linalg.norm(v + u - m) <= 1e-10 * scale
    assert np.linalg.norm(v @ s + s @ v.T) <= 1e-10 * scale * np.linalg.norm(s)
    assert np.linalg.norm(u - u.T) <= 1e-10 * scale
    g = metric_g(a, v @ a, u @ a, s0)
    nv = math.sqrt(metric_g(a, v @ a, v @ a, s0))
    nu = math.sqrt(metric_g(a, u @ a, u @ a, s0))
    assert abs(g) <= 1e-9 * max(nv * nu, 1e-300) + 1e-14
    # idempotence
    v2, u2, _, _ = tangent_split(v @ a, a, s0)
    assert np.linalg.norm(u2) <= 1e-9 * max(np.linalg.norm(v), 1.0)
    assert np.linalg.norm(v2 - v) <= 1e-9 * max(np.linalg.norm(v), 1.0)
    v3, u3, _, _ = tangent_split(u @ a, a, s0)
    assert np.linalg.norm(v3) <= 1e-9 * max(np.linalg.norm(u), 1.0)
