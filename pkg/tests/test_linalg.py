import math

import numpy as np
import pytest

from ssadmit import linalg


def test_kron_examples():
    assert np.array_equal(linalg.kron(np.eye(2), np.eye(2)), np.eye(4))
    assert np.array_equal(linalg.kron(np.diag([1, 0]), np.diag([1, 0])), np.diag([1, 0, 0, 0]))
    rng = np.random.default_rng(1)
    a, b = rng.standard_normal((2, 2)), rng.standard_normal((2, 2))
    k = linalg.kron(a, b)
    for i in range(2):
        for j in range(2):
            for p in range(2):
                for q in range(2):
                    assert k[2 * i + p, 2 * j + q] == a[i, j] * b[p, q]


def test_vec_row_and_inverse():
    assert list(linalg.vec_row([[1, 2], [3, 4]])) == [1, 2, 3, 4]
    a = np.random.default_rng(2).standard_normal((3, 4))
    assert np.array_equal(linalg.mat_from_vec(linalg.vec_row(a), 3, 4), a)
    with pytest.raises(ValueError):
        linalg.mat_from_vec(np.ones(5), 2, 2)


def test_vec_of_product_identity():
    rng = np.random.default_rng(3)
    for _ in range(200):
        p, q, s, t = rng.integers(1, 5, size=4)
        a, b, c = rng.standard_normal((p, q)), rng.standard_normal((q, s)), rng.standard_normal((s, t))
        lhs = linalg.vec_row(a @ b @ c)
        rhs = linalg.kron(a, c.T) @ linalg.vec_row(b)
        assert np.linalg.norm(lhs - rhs) <= 1e-12 * max(1.0, np.linalg.norm(lhs))


def test_svec_examples():
    assert list(linalg.svec([[1, 2], [2, 3]])) == [1, 2, 3]
    assert list(linalg.svec(np.eye(3))) == [1, 0, 0, 1, 0, 1]
    x = np.random.default_rng(4).standard_normal((4, 4))
    x = x + x.T
    assert np.array_equal(linalg.smat(linalg.svec(x)), x)
    with pytest.raises(ValueError):
        linalg.svec([[1, 2], [0, 1]])


def test_dup_matrix_examples():
    H = linalg.dup_matrix(2)
    assert np.array_equal(H, [[1, 0, 0], [0, 1, 0], [0, 1, 0], [0, 0, 1]])
    assert np.array_equal(H.T @ H, np.diag([1, 2, 1]))
    H22 = linalg.dup_matrix(2, 2)
    assert H22.shape == (8, 6)
    assert not H22[:4, 3:].any() and not H22[4:, :3].any()


def test_dup_matrix_identity_on_random_symmetric():
    rng = np.random.default_rng(5)
    for _ in range(1000):
        n = int(rng.integers(1, 6))
        x = rng.integers(-9, 10, size=(n, n)).astype(float)
        x = x + x.T
        H = linalg.dup_matrix(n)
        assert np.array_equal(linalg.vec_row(x), H @ linalg.svec(x))
        assert np.all(H.sum(axis=1) == 1)
        g = H.T @ H
        assert np.array_equal(g, np.diag(np.diag(g)))
        assert set(np.diag(g)) <= {1.0, 2.0}


def test_lifted_gram_distinguishes_symmetric_tuples():
    rng = np.random.default_rng(6)
    H = linalg.dup_matrix(3, 2)
    for _ in range(50):
        z1, z2 = rng.standard_normal(6 * 2), rng.standard_normal(6 * 2)
        phi1, phi2 = H @ z1, H @ z2
        assert not np.allclose(H.T @ phi1, H.T @ phi2)
        assert np.linalg.matrix_rank(H.T @ H) == 12


def test_pinv_examples_and_penrose():
    assert np.allclose(linalg.pinv(np.diag([1.0, 0.0])), np.diag([1.0, 0.0]))
    assert np.allclose(linalg.pinv(np.eye(3)), np.eye(3))
    rng = np.random.default_rng(7)
    for _ in range(100):
        m, n = rng.integers(1, 6, size=2)
        k = int(rng.integers(0, min(m, n) + 1))
        a = rng.standard_normal((m, k)) @ rng.standard_normal((k, n))
        p = linalg.pinv(a)
        scale = max(1.0, np.linalg.norm(a) * np.linalg.norm(p))
        for res in (a @ p @ a - a, p @ a @ p - p, (a @ p).T - a @ p, (p @ a).T - p @ a):
            assert np.linalg.norm(res) <= 1e-10 * scale


def test_null_basis():
    F = linalg.null_basis(np.diag([1.0, 0.0]).T)
    assert F.shape == (2, 1) and np.allclose(np.abs(F[:, 0]), [0, 1])
    assert linalg.null_basis(np.eye(3)).shape == (3, 0)
    F2 = linalg.null_basis(np.array([[0.2, 0.3], [0.0, 0.0]]).T)
    assert np.allclose(np.abs(F2[:, 0]), [0, 1])
    rng = np.random.default_rng(8)
    for _ in range(100):
        m, n = rng.integers(1, 6, size=2)
        k = int(rng.integers(0, min(m, n) + 1))
        a = rng.standard_normal((m, k)) @ rng.standard_normal((k, n))
        B = linalg.null_basis(a)
        assert B.shape[1] == n - linalg.rank(a)
        assert np.linalg.norm(a @ B) <= 1e-10 * max(1.0, np.linalg.norm(a))
        assert np.allclose(B.T @ B, np.eye(B.shape[1]))


def test_rank():
    assert linalg.rank(np.diag([1.0, 0.0])) == 1
    assert linalg.rank(np.zeros((3, 2))) == 0
    E = np.diag([1.0, 0.0])
    C1 = np.array([[0.4, 0.2], [0.0, 0.0]])
    assert linalg.rank(np.hstack([E, C1])) == 1


def test_eig_sym_and_general():
    assert np.allclose(linalg.eig_sym(np.diag([3.0, 1.0, 2.0])), [1, 2, 3])
    assert np.allclose(linalg.eig_sym([[0.0, 1.0], [1.0, 0.0]]), [-1, 1])
    s = np.random.default_rng(9).standard_normal((5, 5))
    s = s + s.T
    assert abs(linalg.eig_sym(s).sum() - np.trace(s)) <= 1e-10 * np.linalg.norm(s)
    rot = linalg.eig_general([[0.0, -1.0], [1.0, 0.0]])
    assert abs(rot.abscissa) < 1e-14 and np.allclose(sorted(rot.eigenvalues.imag), [-1, 1])
    L = linalg.eig_general([[-2.6624, 0.5], [0.6, -1.2]])
    assert abs(L.abscissa + 1.018) < 5e-4
    tri = linalg.eig_general([[1.0, 2.0, 3.0], [0.0, -4.0, 5.0], [0.0, 0.0, 6.0]])
    assert np.allclose(sorted(tri.eigenvalues.real), [-4, 1, 6])
    assert tri.radius == pytest.approx(6.0)


def test_pencil_degree_examples():
    rng = np.random.default_rng(10)
    assert linalg.pencil_degree(np.eye(2), rng.standard_normal((2, 2))) == 2
    E = np.diag([1.0, 0.0])
    A1 = np.array([[-0.5, 0.7], [0.4, 0.5]])
    assert linalg.pencil_degree(E, A1) == 1
    assert linalg.pencil_degree(np.array([[0.0, 1.0], [0.0, 0.0]]), np.eye(2)) == 0
    assert linalg.pencil_degree(E, np.diag([1.0, 0.0])) == -math.inf
    assert not linalg.pencil_regular(E, np.diag([1.0, 0.0]))


def test_pencil_degree_invariant_under_equivalence():
    rng = np.random.default_rng(11)
    for _ in range(100):
        n = int(rng.integers(1, 5))
        r = int(rng.integers(0, n + 1))
        E = rng.standard_normal((n, r)) @ rng.standard_normal((r, n))
        A = rng.standard_normal((n, n))
        L = rng.standard_normal((n, n)) + 3 * np.eye(n)
        R = rng.standard_normal((n, n)) + 3 * np.eye(n)
        assert linalg.pencil_degree(L @ E @ R, L @ A @ R) == linalg.pencil_degree(E, A)
