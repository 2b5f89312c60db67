"""Cyclic Jacobi eigensolver for small Hermitian matrices."""

import logging

import numpy as np

from summation_pairs.exceptions import DomainError, FSPairError

logger = logging.getLogger(__name__)

OFF_DIAGONAL_TOL = 1e-14
MAX_SWEEPS = 100


def _off_diagonal_norm(a):
    return np.sqrt(max(np.sum(np.abs(a) ** 2) - np.sum(np.abs(np.diag(a)) ** 2), 0.0))


def _rotation(a, p, q):
    # 2x2 block D R: D = diag(1, e^{-i phi}) makes a_pq real, R zeroes it
    g = a[p, q]
    modulus = abs(g)
    phase = g / modulus
    tau = (a[q, q].real - a[p, p].real) / (2.0 * modulus)
    t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + np.sqrt(1.0 + tau * tau))
    c = 1.0 / np.sqrt(1.0 + t * t)
    s = t * c
    return np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]], dtype=complex)


def jacobi_eigh(matrix, tol=OFF_DIAGONAL_TOL, max_sweeps=MAX_SWEEPS):
    """
    Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.

    Sweeps all (p, q) pairs in order until the off-diagonal Frobenius mass
    falls below tol times the total.
    """
    a = np.array(matrix, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {a.shape}")
    n = a.shape[0]
    if not np.allclose(a, a.conj().T, rtol=1e-12, atol=1e-12 * max(np.max(np.abs(a), initial=0.0), 1e-300)):
        raise DomainError("matrix is not Hermitian")
    a = (a + a.conj().T) / 2.0
    vectors = np.eye(n, dtype=complex)
    total = np.linalg.norm(a)

    for sweep in range(max_sweeps):
        if _off_diagonal_norm(a) <= tol * total:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if a[p, q] == 0:
                    continue
                block = _rotation(a, p, q)
                cols = [p, q]
                a[:, cols] = a[:, cols] @ block
                a[cols, :] = block.conj().T @ a[cols, :]
                a[p, q] = a[q, p] = 0.0
                vectors[:, cols] = vectors[:, cols] @ block
    else:
        if _off_diagonal_norm(a) > tol * total:
            raise FSPairError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")

    values = np.real(np.diag(a))
    order = np.argsort(values, kind="stable")
    logger.debug(f"Jacobi converged after {sweep} sweeps on a {n}x{n} matrix")
    return values[order], vectors[:, order]


def charpoly_eigenvalues(matrix):
    """
    Eigenvalues from the roots of the characteristic polynomial, with the
    coefficients built by the Faddeev-LeVerrier recurrence. Only meant as an
    independent check on small matrices.
    """
    a = np.array(matrix, dtype=complex)
    n = a.shape[0]
    coeffs = [1.0 + 0j]
    m = np.zeros_like(a)
    identity = np.eye(n, dtype=complex)
    for k in range(1, n + 1):
        m = a @ m + coeffs[-1] * identity
        coeffs.append(-np.trace(a @ m) / k)
    return np.sort(np.real(np.roots(coeffs)))
