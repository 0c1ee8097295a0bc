import numpy as np
import pytest

from lcuout.linalg import (
    dft_matrix,
    haar_random_unitary,
    hadamard_matrix,
    kron,
    numerical_rank,
    random_state,
    rng,
    svd,
)


def test_rng_is_deterministic():
    a = rng(5).standard_normal(8)
    b = rng(5).standard_normal(8)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, rng(6).standard_normal(8))


@pytest.mark.parametrize("k", [1, 2, 4, 8, 16])
def test_hadamard_matrix_orthogonal(k):
    h = hadamard_matrix(k)
    np.testing.assert_allclose(h @ h.T, np.eye(k), atol=1e-12)
    # symmetric, entries +-1/sqrt(k)
    np.testing.assert_array_equal(h, h.T)
    np.testing.assert_allclose(np.abs(h), 1 / np.sqrt(k), atol=1e-15)


def test_hadamard_matrix_2x2_values():
    h = hadamard_matrix(2) * np.sqrt(2)
    np.testing.assert_allclose(h, [[1, 1], [1, -1]], atol=1e-15)


def test_hadamard_matrix_rejects_non_power_of_two():
    with pytest.raises(ValueError):
        hadamard_matrix(3)


@pytest.mark.parametrize("k", [1, 2, 3, 4, 6, 8])
def test_dft_matrix_unitary(k):
    f = dft_matrix(k)
    np.testing.assert_allclose(f.conj().T @ f, np.eye(k), atol=1e-12)


def test_dft_matrix_entries():
    k = 5
    f = dft_matrix(k)
    w = np.exp(2j * np.pi / k)
    for j in range(k):
        for t in range(k):
            assert abs(f[j, t] - w ** (j * t) / np.sqrt(k)) < 1e-12


@pytest.mark.parametrize("dim", [1, 2, 5, 16])
@pytest.mark.parametrize("seed", [0, 1, 77])
def test_haar_random_unitary_is_unitary(dim, seed):
    u = haar_random_unitary(dim, seed)
    assert u.shape == (dim, dim)
    np.testing.assert_allclose(u.conj().T @ u, np.eye(dim), atol=1e-12)


def test_haar_random_unitary_seeded():
    np.testing.assert_array_equal(haar_random_unitary(6, 3), haar_random_unitary(6, 3))
    assert not np.allclose(haar_random_unitary(6, 3), haar_random_unitary(6, 4))


def test_haar_random_unitary_accepts_generator():
    gen = rng(9)
    u1 = haar_random_unitary(4, gen)
    u2 = haar_random_unitary(4, gen)  # stream advances
    assert not np.allclose(u1, u2)
    np.testing.assert_allclose(u1.conj().T @ u1, np.eye(4), atol=1e-12)


def test_random_state_normalized():
    psi = random_state(16, 2)
    assert psi.dtype == complex
    assert abs(np.linalg.norm(psi) - 1) < 1e-12
    np.testing.assert_array_equal(psi, random_state(16, 2))


def test_svd_reconstruction_seeded():
    gen = rng(11)
    a = gen.standard_normal((6, 4)) + 1j * gen.standard_normal((6, 4))
    u, s, vh = svd(a)
    assert u.shape == (6, 4) and s.shape == (4,) and vh.shape == (4, 4)
    assert np.all(np.diff(s) <= 0) and np.all(s >= 0)
    np.testing.assert_allclose(u.conj().T @ u, np.eye(4), atol=1e-10)
    np.testing.assert_allclose(vh @ vh.conj().T, np.eye(4), atol=1e-10)
    rel = np.linalg.norm((u * s) @ vh - a) / np.linalg.norm(a)
    assert rel < 1e-10


def test_svd_named_fields():
    res = svd(np.eye(3))
    np.testing.assert_allclose(res.s, np.ones(3))
    np.testing.assert_allclose(res.u @ np.diag(res.s) @ res.vh, np.eye(3), atol=1e-12)


def test_numerical_rank():
    gen = rng(4)
    c = gen.standard_normal((8, 3)) + 1j * gen.standard_normal((8, 3))
    x = gen.standard_normal((3, 20)) + 1j * gen.standard_normal((3, 20))
    assert numerical_rank(c @ x) == 3
    assert numerical_rank(np.zeros((4, 4))) == 0
    # tolerance is relative to the top singular value
    assert numerical_rank(np.diag([1.0, 1e-14])) == 1
    assert numerical_rank(np.diag([1.0, 1e-6]), tol=1e-8) == 2


def test_kron_matches_elementwise_definition():
    gen = rng(8)
    a = gen.standard_normal((2, 2))
    b = gen.standard_normal((3, 3))
    out = kron(a, b)
    for i in range(2):
        for j in range(2):
            for p in range(3):
                for q in range(3):
                    assert out[i * 3 + p, j * 3 + q] == a[i, j] * b[p, q]
    # complex path agrees up to multiply rounding
    ac = a + 1j * gen.standard_normal((2, 2))
    bc = b + 1j * gen.standard_normal((3, 3))
    expect = np.array([[ac[i // 3 % 2, j // 3] * bc[i % 3, j % 3] for j in range(6)] for i in range(6)])
    np.testing.assert_allclose(kron(ac, bc), expect, atol=1e-14)
