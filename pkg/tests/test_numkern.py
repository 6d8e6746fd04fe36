import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dirsim.errors import NotPositiveDefinite, NotSymmetric
from dirsim.numkern import chol_lower, signed_svd3, sym_eigen, sym_inv_sqrt


def _check_eigen(a, res):
    w, v = res
    scale = 1 + np.max(np.abs(a))
    assert np.max(np.abs((v * w) @ v.T - a)) <= 1e-10 * scale
    assert np.max(np.abs(v.T @ v - np.eye(a.shape[0]))) <= 1e-12
    assert np.all(np.diff(w) >= 0)


def test_sym_eigen_identity():
    w, v = sym_eigen(np.eye(3))
    np.testing.assert_allclose(w, [1, 1, 1])
    np.testing.assert_allclose(v.T @ v, np.eye(3), atol=1e-15)


def test_sym_eigen_diagonal_gives_permutation():
    w, v = sym_eigen(np.diag([3.0, 1.0, 2.0]))
    np.testing.assert_allclose(w, [1, 2, 3])
    np.testing.assert_array_equal(np.abs(v), np.eye(3)[:, [1, 2, 0]])


def test_sym_eigen_2x2_hand_solution():
    # characteristic polynomial l^2 - 1 = 0; eigenvectors (1, -1)/sqrt2 and (1, 1)/sqrt2
    w, v = sym_eigen([[0.0, 1.0], [1.0, 0.0]])
    np.testing.assert_allclose(w, [-1.0, 1.0], atol=1e-15)
    r = 1 / math.sqrt(2)
    np.testing.assert_allclose(v, [[r, r], [-r, r]], atol=1e-15)


def test_sym_eigen_deterministic_and_symmetrizes():
    rng = np.random.default_rng(3)
    b = rng.normal(size=(5, 5))
    a = b + b.T
    a_noisy = a + 1e-12 * np.triu(np.ones((5, 5)), 1)
    r1, r2 = sym_eigen(a_noisy), sym_eigen(a_noisy.copy())
    np.testing.assert_array_equal(r1.eigenvectors, r2.eigenvectors)
    _check_eigen(a, r1)


def test_sym_eigen_rejects_asymmetric():
    with pytest.raises(NotSymmetric):
        sym_eigen([[1.0, 2.0], [0.0, 1.0]])


@pytest.mark.parametrize("q", [2, 3, 4, 8])
def test_sym_eigen_random_batch(q):
    rng = np.random.default_rng(q)
    for _ in range(1000):
        b = rng.normal(size=(q, q)) * 10 ** rng.uniform(-3, 3)
        a = 0.5 * (b + b.T)
        _check_eigen(a, sym_eigen(a))


def test_chol_examples():
    np.testing.assert_allclose(chol_lower(np.eye(4)), np.eye(4))
    np.testing.assert_allclose(chol_lower(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))
    expected = [[math.sqrt(2), 0.0], [1 / math.sqrt(2), math.sqrt(1.5)]]
    np.testing.assert_allclose(chol_lower([[2.0, 1.0], [1.0, 2.0]]), expected, rtol=1e-15)


def test_chol_not_pd():
    with pytest.raises(NotPositiveDefinite):
        chol_lower([[1.0, 2.0], [2.0, 1.0]])


def test_sym_inv_sqrt_examples():
    np.testing.assert_allclose(sym_inv_sqrt(np.eye(3)), np.eye(3), atol=1e-15)
    np.testing.assert_allclose(sym_inv_sqrt(np.diag([4.0, 25.0])), np.diag([0.5, 0.2]), rtol=1e-14)
    # [[5,3],[3,5]]: eigenvalue 2 on (1,-1)/sqrt2, 8 on (1,1)/sqrt2
    s2, s8 = 1 / math.sqrt(2), 1 / math.sqrt(8)
    expected = 0.5 * np.array([[s2 + s8, -s2 + s8], [-s2 + s8, s2 + s8]])
    got = sym_inv_sqrt([[5.0, 3.0], [3.0, 5.0]])
    np.testing.assert_allclose(got, expected, rtol=1e-14)


def test_sym_inv_sqrt_not_pd():
    with pytest.raises(NotPositiveDefinite):
        sym_inv_sqrt(np.diag([1.0, -1.0]))


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, (4, 4), elements=st.floats(-5, 5)))
def test_spd_kernels_property(b):
    a = b @ b.T + 0.1 * np.eye(4)
    low = chol_lower(a)
    assert np.all(np.diag(low) > 0)
    assert np.max(np.abs(low @ low.T - a)) <= 1e-10 * np.max(np.abs(a))
    s = sym_inv_sqrt(a)
    np.testing.assert_allclose(s, s.T, atol=1e-12)
    assert np.max(np.abs(s @ a @ s - np.eye(4))) <= 1e-9


def _check_ssvd(f, res):
    u, d, v = res
    assert abs(np.linalg.det(u) - 1) < 1e-10
    assert abs(np.linalg.det(v) - 1) < 1e-10
    assert np.max(np.abs(u @ np.diag(d) @ v.T - f)) <= 1e-10 * (1 + np.max(np.abs(f)))
    assert d[0] >= d[1] >= abs(d[2])
    det = np.linalg.det(f)
    if abs(det) > 1e-9:
        assert (d[2] < 0) == (det < 0)


def test_signed_svd_identity():
    u, d, v = signed_svd3(np.eye(3))
    np.testing.assert_allclose(d, [1, 1, 1])
    np.testing.assert_allclose(u @ v.T, np.eye(3), atol=1e-15)


def test_signed_svd_negative_determinant():
    f = np.diag([3.0, 2.0, -1.0])
    res = signed_svd3(f)
    np.testing.assert_allclose(res.delta, [3, 2, -1], atol=1e-14)
    _check_ssvd(f, res)


def test_signed_svd_rotated_input():
    th = 0.7
    rot = np.array([[math.cos(th), -math.sin(th), 0], [math.sin(th), math.cos(th), 0], [0, 0, 1]])
    f = rot @ np.diag([2.0, 1.0, 1.0])
    res = signed_svd3(f)
    np.testing.assert_allclose(res.delta, [2, 1, 1], atol=1e-14)
    _check_ssvd(f, res)
    # leading singular direction is rot's first column
    assert abs(abs(res.u[:, 0] @ rot[:, 0]) - 1) < 1e-12


def test_signed_svd_random_batch():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        f = rng.normal(size=(3, 3)) * 10 ** rng.uniform(-2, 2)
        _check_ssvd(f, signed_svd3(f))


def test_signed_svd_degenerate_inputs():
    for f in [np.zeros((3, 3)), np.diag([1.0, 1.0, 0.0]), np.outer([1, 2, 3], [0, 1, 1.0])]:
        _check_ssvd(f, signed_svd3(f))
