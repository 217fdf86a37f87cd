import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dmkit import linalg as la
from dmkit.qmodel import basis_projector, dyad

from conftest import random_complex
from strategies import complex_matrices, generators


def naive_matmul(a, b):
    n, m = a.shape[0], b.shape[1]
    out = np.zeros((n, m), dtype=complex)
    for i in range(n):
        for j in range(m):
            for k in range(a.shape[1]):
                out[i, j] += a[i, k] * b[k, j]
    return out


def test_matmul_identity_and_basis_algebra(rng):
    m = random_complex(rng, 3, 3)
    np.testing.assert_array_equal(la.matmul(np.eye(3), m), m)
    np.testing.assert_array_equal(la.matmul(dyad(2, 0, 1), dyad(2, 1, 0)), dyad(2, 0, 0))


def test_matmul_against_triple_loop(rng):
    a, b = random_complex(rng, 3, 3), random_complex(rng, 3, 3)
    np.testing.assert_allclose(la.matmul(a, b), naive_matmul(a, b), atol=1e-12)


def test_matmul_shape_mismatch():
    with pytest.raises(ValueError):
        la.matmul(np.eye(2), np.eye(3))


def test_dagger_cases(rng):
    h = random_complex(rng, 3, 3)
    h = h + h.conj().T
    np.testing.assert_array_equal(la.dagger(h), h)
    np.testing.assert_array_equal(la.dagger(1j * np.eye(2)), -1j * np.eye(2))
    m = random_complex(rng, 4, 4)
    np.testing.assert_array_equal(la.dagger(la.dagger(m)), m)


def test_trace_cases(rng):
    assert la.trace(np.eye(4)) == 4
    assert la.trace(dyad(2, 0, 1)) == 0
    a, b = random_complex(rng, 3, 3), random_complex(rng, 3, 3)
    assert abs(la.trace(a @ b) - la.trace(b @ a)) < 1e-12


def test_kron_cases(rng):
    np.testing.assert_array_equal(la.kron(np.eye(2), np.eye(3)), np.eye(6))
    z = np.diag([1.0, -1.0])
    # expanded by hand: probe block 0 gets +P, block 1 gets -P
    expected = np.zeros((6, 6))
    expected[0, 0], expected[3, 3] = 1.0, -1.0
    np.testing.assert_array_equal(la.kron(z, basis_projector(3, 0)), expected)
    a, b, c, d = (random_complex(rng, 2, 2) for _ in range(4))
    np.testing.assert_allclose(la.kron(a, b) @ la.kron(c, d), la.kron(a @ c, b @ d), atol=1e-12)


def test_ket_normalization():
    v = la.ket([3, 4], normalize=True)
    assert np.isclose(np.linalg.norm(v), 1.0)
    with pytest.raises(ValueError):
        la.ket([3, 4])
    with pytest.raises(ValueError):
        la.ket([0, 0], normalize=True)


def test_as_matrix_rejects_bad_input():
    with pytest.raises(ValueError):
        la.as_matrix([[1, np.nan], [0, 1]])
    with pytest.raises(ValueError):
        la.as_matrix(np.ones((2, 3)), square=True)


def test_eig_general_diagonal():
    eig = la.eig_general(np.diag([3.0, 1.0, 2.0]))
    np.testing.assert_allclose(eig.eigenvalues, [3, 2, 1], atol=1e-12)


def test_eig_general_hermitian_spectrum_is_real(rng):
    h = random_complex(rng, 4, 4)
    eig = la.eig_general(h + h.conj().T)
    assert np.max(np.abs(np.imag(eig.eigenvalues))) < 1e-10


def test_eig_general_reconstruction_and_residual(rng):
    for _ in range(20):
        a = random_complex(rng, 3, 3)
        eig = la.eig_general(a)
        np.testing.assert_allclose(eig.reconstruct(), a, atol=1e-9)
        for lam, v in zip(eig.eigenvalues, eig.eigenvectors.T):
            assert np.linalg.norm(a @ v - lam * v) <= 1e-9 * max(1.0, np.linalg.norm(a))


def test_eig_general_matches_lapack_spectrum(rng):
    # independent oracle: LAPACK through numpy
    for d in (2, 3, 5):
        a = random_complex(rng, d, d)
        ours = np.sort_complex(np.asarray(la.eig_general(a).eigenvalues))
        ref = np.sort_complex(np.linalg.eigvals(a))
        np.testing.assert_allclose(ours, ref, atol=1e-9)


def test_eig_general_degenerate_diagonalizable(rng):
    u = np.linalg.qr(random_complex(rng, 4, 4))[0]
    a = u @ np.diag([2.0, 2.0, 1.0, 1.0]) @ u.conj().T
    eig = la.eig_general(a)
    np.testing.assert_allclose(np.sort(np.real(eig.eigenvalues)), [1, 1, 2, 2], atol=1e-9)
    np.testing.assert_allclose(eig.reconstruct(), a, atol=1e-9)


def test_eig_general_defective_matrix_reports():
    with pytest.raises(la.EigenError, match="diagonalizable"):
        la.eig_general(np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_eig_hermitian_cases(rng):
    np.testing.assert_allclose(la.eig_hermitian(np.eye(3)).eigenvalues, [1, 1, 1])
    np.testing.assert_allclose(la.eig_hermitian(np.diag([1.0, -1.0])).eigenvalues, [1, -1])
    h = random_complex(rng, 5, 5)
    h = h + h.conj().T
    assert abs(np.sum(la.eig_hermitian(h).eigenvalues) - np.trace(h).real) < 1e-10


def test_eig_hermitian_rejects_non_hermitian(rng):
    with pytest.raises(ValueError):
        la.eig_hermitian(random_complex(rng, 3, 3))


@given(complex_matrices(dim=4), complex_matrices(dim=4), complex_matrices(dim=4))
def test_matmul_associative(a, b, c):
    lhs = la.matmul(la.matmul(a, b), c)
    rhs = la.matmul(a, la.matmul(b, c))
    assert np.linalg.norm(lhs - rhs) <= 1e-10 * np.linalg.norm(lhs)


@given(complex_matrices(dim=3), complex_matrices(dim=3))
def test_dagger_reverses_products(a, b):
    np.testing.assert_allclose(la.dagger(la.matmul(a, b)), la.matmul(la.dagger(b), la.dagger(a)),
                               atol=1e-12)


@given(complex_matrices(dim=4), complex_matrices(dim=4), complex_matrices(dim=4))
def test_trace_cyclic(a, b, c):
    assert abs(la.trace(a @ b @ c) - la.trace(c @ a @ b)) < 1e-10 * max(1.0, np.linalg.norm(a @ b @ c))


@given(complex_matrices())
def test_eig_hermitian_diagonalizes(m):
    h = m + m.conj().T
    eig = la.eig_hermitian(h)
    v = eig.eigenvectors
    off = v.conj().T @ h @ v
    np.testing.assert_allclose(off, np.diag(np.diag(off)), atol=1e-9)
    assert list(eig.eigenvalues) == sorted(eig.eigenvalues, reverse=True)


@given(complex_matrices())
def test_eig_general_eigenpairs(a):
    eig = la.eig_general(a)
    for lam, v in zip(eig.eigenvalues, eig.eigenvectors.T):
        assert np.linalg.norm(a @ v - lam * v) <= 1e-9 * max(1.0, np.linalg.norm(a))


@given(generators(), st.integers(min_value=2, max_value=5))
def test_eig_general_on_near_degenerate_spectra(gen, d):
    # repeated eigenvalues with a random non-orthogonal basis
    values = gen.choice([0.0, 0.5, 1.0], size=d)
    basis = gen.normal(size=(d, d)) + 1j * gen.normal(size=(d, d))
    a = basis @ np.diag(values) @ np.linalg.inv(basis)
    eig = la.eig_general(a)
    np.testing.assert_allclose(np.sort(np.real(eig.eigenvalues)), np.sort(values), atol=1e-6)
