"""Small dense complex linear algebra.

Matrices are plain ``numpy`` arrays of dtype ``complex128``; the helpers in
this module validate shapes and finiteness and never modify their inputs.
Tensor products are always ordered probe (x) system.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "EigenDecomposition",
    "EigenError",
    "as_matrix",
    "ket",
    "matmul",
    "dagger",
    "trace",
    "kron",
    "outer",
    "eig_general",
    "eig_hermitian",
]

MAX_QR_ITERATIONS = 10_000
HERMITIAN_TOL = 1e-9


class EigenError(ArithmeticError):
    """Eigendecomposition failed.

    Parameters
    ----------
    message : str
        Description of the failure.
    iterations : int
        Number of QR sweeps performed before giving up.
    """

    def __init__(self, message, iterations=0):
        super().__init__(f"{message} (after {iterations} iterations)")
        self.iterations = iterations


@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return v @ np.diag(self.eigenvalues) @ np.linalg.inv(v)


def as_matrix(a, *, square=False) -> np.ndarray:
    """Coerce ``a`` to a finite 2-d complex128 array (copy)."""
    m = np.array(a, dtype=np.complex128, copy=True)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2-d matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    if square and m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    m.flags.writeable = False
    return m


def ket(amplitudes, *, normalize=False) -> np.ndarray:
    """Return a unit ket. Unnormalized input is rejected unless ``normalize``."""
    v = np.array(amplitudes, dtype=np.complex128, copy=True).reshape(-1)
    if v.size < 1 or not np.all(np.isfinite(v)):
        raise ValueError("ket needs at least one finite amplitude")
    norm = np.linalg.norm(v)
    if normalize:
        if norm == 0:
            raise ValueError("cannot normalize the zero vector")
        v = v / norm
    elif abs(norm - 1.0) > 1e-12:
        raise ValueError(f"ket is not normalized (norm={norm!r})")
    v.flags.writeable = False
    return v


def outer(bra_side, ket_side=None) -> np.ndarray:
    """|a><b| for vectors a, b (b defaults to a)."""
    a = np.asarray(bra_side, dtype=np.complex128)
    b = a if ket_side is None else np.asarray(ket_side, dtype=np.complex128)
    return np.outer(a, b.conj())


def matmul(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ValueError(f"cannot multiply shapes {a.shape} and {b.shape}")
    return a @ b


def dagger(a) -> np.ndarray:
    return np.asarray(a, dtype=np.complex128).conj().T.copy()


def trace(a) -> complex:
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"trace needs a square matrix, got shape {a.shape}")
    return complex(np.trace(a))


def kron(a, b) -> np.ndarray:
    """Kronecker product with the indices of ``a`` outermost."""
    return np.kron(np.asarray(a, dtype=np.complex128), np.asarray(b, dtype=np.complex128))


def _hessenberg(a):
    """Householder reduction ``a = q h q^H`` with ``h`` upper Hessenberg."""
    h = np.array(a, dtype=np.complex128)
    n = h.shape[0]
    q = np.eye(n, dtype=np.complex128)
    for k in range(n - 2):
        x = h[k + 1:, k].copy()
        xnorm = np.linalg.norm(x)
        if xnorm == 0.0:
            continue
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x
        v[0] += phase * xnorm
        v /= np.linalg.norm(v)
        h[k + 1:, :] -= 2.0 * np.outer(v, v.conj() @ h[k + 1:, :])
        h[:, k + 1:] -= 2.0 * np.outer(h[:, k + 1:] @ v, v.conj())
        q[:, k + 1:] -= 2.0 * np.outer(q[:, k + 1:] @ v, v.conj())
        h[k + 2:, k] = 0.0
    return h, q


def _givens(x, y):
    """Unitary 2x2 ``g`` with ``g @ [x, y] = [r, 0]``."""
    r = np.hypot(abs(x), abs(y))
    if r == 0.0:
        return np.eye(2, dtype=np.complex128)
    if x == 0:
        c, s = 0.0, 1.0 + 0j
    else:
        phase = x / abs(x)
        c = abs(x) / r
        s = phase * np.conj(y) / r
    return np.array([[c, s], [-np.conj(s), c]], dtype=np.complex128)


def _wilkinson_shift(a, b, c, d):
    half = 0.5 * (a - d)
    disc = np.sqrt(half * half + b * c)
    mean = 0.5 * (a + d)
    mu1, mu2 = mean + disc, mean - disc
    return mu1 if abs(mu1 - d) < abs(mu2 - d) else mu2


def _schur(a, max_iter=MAX_QR_ITERATIONS):
    """Complex Schur form via Hessenberg reduction and shifted QR sweeps."""
    h, z = _hessenberg(a)
    n = h.shape[0]
    eps = np.finfo(float).eps
    scale = max(np.linalg.norm(h), np.finfo(float).tiny)
    hi = n - 1
    iterations = 0
    since_deflation = 0
    while hi > 0:
        lo = hi
        while lo > 0:
            off = abs(h[lo, lo - 1])
            local = abs(h[lo - 1, lo - 1]) + abs(h[lo, lo])
            if off <= eps * (local if local > 0 else scale):
                h[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            hi -= 1
            since_deflation = 0
            continue
        if iterations >= max_iter:
            raise EigenError("shifted QR did not converge", iterations)
        iterations += 1
        since_deflation += 1

        mu = _wilkinson_shift(h[hi - 1, hi - 1], h[hi - 1, hi], h[hi, hi - 1], h[hi, hi])
        if since_deflation % 11 == 10:
            # exceptional shift to break cycles
            mu = h[hi, hi] + abs(h[hi, hi - 1]) * (0.75 + 0.25j)

        idx = np.arange(lo, hi + 1)
        h[idx, idx] -= mu
        rotations = []
        for k in range(lo, hi):
            g = _givens(h[k, k], h[k + 1, k])
            h[k:k + 2, k:] = g @ h[k:k + 2, k:]
            h[k + 1, k] = 0.0
            rotations.append((k, g))
        for k, g in rotations:
            gh = g.conj().T
            h[:hi + 1, k:k + 2] = h[:hi + 1, k:k + 2] @ gh
            z[:, k:k + 2] = z[:, k:k + 2] @ gh
        h[idx, idx] += mu
    return np.triu(h), z, iterations


def eig_general(a) -> EigenDecomposition:
    """Eigendecomposition of a general square complex matrix.

    Eigenvalues are returned in descending order of real part, with unit-norm
    eigenvectors as columns. Raises :class:`EigenError` if the QR iteration
    hits its cap or the matrix is numerically defective.
    """
    m = as_matrix(a, square=True)
    n = m.shape[0]
    t, z, iterations = _schur(m)
    lam = np.diag(t).copy()
    eps = np.finfo(float).eps
    smin = max(eps * np.linalg.norm(t), np.finfo(float).tiny)

    y = np.zeros((n, n), dtype=np.complex128)
    for k in range(n):
        y[k, k] = 1.0
        for i in range(k - 1, -1, -1):
            denom = t[i, i] - lam[k]
            if abs(denom) < smin:
                denom = smin
            y[i, k] = -(t[i, i + 1:k + 1] @ y[i + 1:k + 1, k]) / denom
    v = z @ y
    v /= np.linalg.norm(v, axis=0)

    if np.linalg.cond(v) > 1e12:
        raise EigenError("matrix is not diagonalizable", iterations)
    resid = np.linalg.norm(m @ v - v * lam, axis=0)
    if np.any(resid > 1e-9 * max(np.linalg.norm(m), 1.0)):
        raise EigenError("eigenpair residual too large", iterations)

    order = np.lexsort((-lam.imag, -lam.real))
    return EigenDecomposition(lam[order], v[:, order])


def eig_hermitian(a) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending."""
    m = as_matrix(a, square=True)
    if np.max(np.abs(m - m.conj().T)) >= HERMITIAN_TOL:
        raise ValueError("eig_hermitian called on a non-Hermitian matrix")
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    return EigenDecomposition(w[::-1].copy(), v[:, ::-1].copy())
