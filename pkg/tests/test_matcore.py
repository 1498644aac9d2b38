import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

from polarflow.errors import NotSpd, NotSymmetric, Singular
from polarflow.matcore import det, inverse_det, mat_exp, spd_sqrt, svd, sym_eig

from conftest import random_spd


def series_exp(m, terms=30):
    out = np.eye(m.shape[0])
    term = np.eye(m.shape[0])
    for k in range(1, terms):
        term = term @ m / k
        out = out + term
    return out


# sym_eig

def test_sym_eig_diagonal():
    w, q = sym_eig(np.diag([2.0, 1.0]))
    np.testing.assert_array_equal(w, [2.0, 1.0])
    np.testing.assert_array_equal(q, np.eye(2))


def test_sym_eig_zero():
    w, q = sym_eig(np.zeros((2, 2)))
    np.testing.assert_array_equal(w, [0.0, 0.0])
    np.testing.assert_array_equal(q, np.eye(2))


def test_sym_eig_two_by_two():
    # characteristic polynomial l^2 - 4 l + 3
    w, q = sym_eig([[2.0, 1.0], [1.0, 2.0]])
    np.testing.assert_allclose(w, [3.0, 1.0], rtol=1e-14)
    r = 1 / math.sqrt(2)
    np.testing.assert_allclose(np.abs(q[:, 0]), [r, r], rtol=1e-14)
    np.testing.assert_allclose(np.abs(q[:, 1]), [r, r], rtol=1e-14)
    assert q[0, 1] * q[1, 1] < 0


def test_sym_eig_sign_convention(rng):
    s = random_spd(rng, 5)
    _, q = sym_eig(s)
    for j in range(5):
        col = q[:, j]
        assert col[np.argmax(np.abs(col))] > 0


def test_sym_eig_rejects_asymmetric():
    with pytest.raises(NotSymmetric):
        sym_eig([[1.0, 2.0], [0.0, 1.0]])


@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_sym_eig_reconstruction(seed, n):
    g = np.random.default_rng(seed).normal(size=(n, n))
    s = g + g.T
    w, q = sym_eig(s)
    scale = max(np.linalg.norm(s), 1e-300)
    assert np.linalg.norm((q * w) @ q.T - s) <= 1e-10 * scale
    assert np.linalg.norm(q.T @ q - np.eye(n)) <= 1e-12
    assert np.all(np.diff(w) <= 0)
    np.testing.assert_allclose(np.sort(w), np.linalg.eigvalsh(s), atol=1e-12 * scale)


# spd_sqrt

@pytest.mark.parametrize(
    "s, r",
    [
        (np.eye(3), np.eye(3)),
        (np.diag([4.0, 9.0]), np.diag([2.0, 3.0])),
        ([[5.0, 4.0], [4.0, 5.0]], [[2.0, 1.0], [1.0, 2.0]]),
    ],
)
def test_spd_sqrt_examples(s, r):
    np.testing.assert_allclose(spd_sqrt(s), r, atol=1e-14)


def test_spd_sqrt_rejects_indefinite():
    with pytest.raises(NotSpd):
        spd_sqrt(np.diag([1.0, -1.0]))
    with pytest.raises(NotSpd):
        spd_sqrt(np.diag([1.0, 0.0]))


@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_spd_sqrt_property(seed, n):
    s = random_spd(np.random.default_rng(seed), n)
    r = spd_sqrt(s)
    assert np.linalg.norm(r @ r - s) <= 1e-10 * np.linalg.norm(s)
    assert np.linalg.norm(r - r.T) <= 1e-12 * np.linalg.norm(r)
    assert np.linalg.eigvalsh(r).min() > 0


# mat_exp

def test_mat_exp_zero():
    np.testing.assert_array_equal(mat_exp(np.zeros((3, 3))), np.eye(3))


def test_mat_exp_diagonal():
    np.testing.assert_allclose(mat_exp(np.diag([math.log(2), 0.0])), np.diag([2.0, 1.0]), rtol=1e-14)


def test_mat_exp_quarter_turn():
    m = np.array([[0.0, -math.pi / 2], [math.pi / 2, 0.0]])
    expected = series_exp(m)
    np.testing.assert_allclose(expected, [[0, -1], [1, 0]], atol=1e-14)
    np.testing.assert_allclose(mat_exp(m), expected, atol=1e-14)


@given(st.integers(0, 2**32 - 1), st.integers(1, 5), st.floats(0.0, 10.0))
def test_mat_exp_matches_series(seed, n, norm):
    g = np.random.default_rng(seed).normal(size=(n, n))
    m = g * (norm / max(np.linalg.norm(g), 1e-300))
    # 30 terms do not converge to 1e-12 at |M| = 10; scipy is the reference there
    ref = series_exp(m, 80) if norm <= 5 else scipy.linalg.expm(m)
    assert np.linalg.norm(mat_exp(m) - ref) <= 1e-12 * np.linalg.norm(ref)


@given(st.integers(0, 2**32 - 1), st.integers(1, 5), st.floats(0.0, 5.0))
def test_mat_exp_inverse(seed, n, norm):
    g = np.random.default_rng(seed).normal(size=(n, n))
    m = g * (norm / max(np.linalg.norm(g), 1e-300))
    assert np.linalg.norm(mat_exp(m) @ mat_exp(-m) - np.eye(n)) <= 1e-10


@given(st.integers(0, 2**32 - 1), st.integers(2, 5))
def test_mat_exp_skew_is_orthogonal(seed, n):
    g = np.random.default_rng(seed).normal(size=(n, n))
    q = mat_exp(g - g.T)
    assert np.linalg.norm(q.T @ q - np.eye(n)) <= 1e-10


# inverse_det

@pytest.mark.parametrize(
    "m, inv, d",
    [
        (np.eye(2), np.eye(2), 1.0),
        (np.diag([2.0, 4.0]), np.diag([0.5, 0.25]), 8.0),
        ([[1.0, 1.0], [0.0, 1.0]], [[1.0, -1.0], [0.0, 1.0]], 1.0),
    ],
)
def test_inverse_det_examples(m, inv, d):
    got_inv, got_det = inverse_det(m)
    np.testing.assert_allclose(got_inv, inv, atol=1e-15)
    np.testing.assert_allclose(np.asarray(m) @ got_inv, np.eye(2), atol=1e-15)
    assert got_det == pytest.approx(d, rel=1e-15)


def test_inverse_det_singular():
    with pytest.raises(Singular):
        inverse_det([[1.0, 2.0], [2.0, 4.0]])
    with pytest.raises(Singular):
        inverse_det(np.zeros((3, 3)))
    # scale-aware: a tiny but well-conditioned matrix is not singular
    inv, d = inverse_det(1e-8 * np.eye(3))
    assert d == pytest.approx(1e-24)


@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_det_multiplicative(seed, n):
    r = np.random.default_rng(seed)
    m, k = r.normal(size=(n, n)), r.normal(size=(n, n))
    dm, dk = det(m), det(k)
    assert det(m @ k) == pytest.approx(dm * dk, rel=1e-10, abs=1e-300)
    inv, d = inverse_det(m)
    assert np.linalg.norm(m @ inv - np.eye(n)) <= 1e-10 * np.linalg.cond(m)
    assert d == pytest.approx(np.linalg.det(m), rel=1e-10)


# svd

@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_svd_against_numpy(seed, n):
    m = np.random.default_rng(seed).normal(size=(n, n))
    u, s, v = svd(m)
    np.testing.assert_allclose(s, np.linalg.svd(m, compute_uv=False), rtol=1e-10, atol=1e-12)
    assert np.linalg.norm((u * s) @ v.T - m) <= 1e-12 * np.linalg.norm(m)
    assert np.linalg.norm(u.T @ u - np.eye(n)) <= 1e-10
    assert np.linalg.norm(v.T @ v - np.eye(n)) <= 1e-12
