"""Dense complex matrix services: structure predicates, Hermitian
eigendecomposition with a deterministic phase convention, and the Pfaffian
of a skew-symmetric matrix (Parlett-Reid tridiagonalization with pivoting).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonHermitian, NotSkewSymmetric, OddDimension, PfaffianNearZero

STRUCT_TOL = 1e-9


def _tol(a: np.ndarray, tol: float | None) -> float:
    if tol is not None:
        return tol
    return STRUCT_TOL * max(1.0, float(np.linalg.norm(a)))


def hermitian_deviation(a: np.ndarray) -> float:
    return float(np.linalg.norm(a - a.conj().T))


def is_hermitian(a: np.ndarray, tol: float | None = None) -> bool:
    return hermitian_deviation(a) <= _tol(a, tol)


def unitary_deviation(a: np.ndarray) -> float:
    n = a.shape[0]
    return float(np.linalg.norm(a.conj().T @ a - np.eye(n)))


def is_unitary(a: np.ndarray, tol: float | None = None) -> bool:
    return unitary_deviation(a) <= _tol(a, tol)


def skew_deviation(a: np.ndarray) -> float:
    return float(np.linalg.norm(a + a.T))


def is_skew_symmetric(a: np.ndarray, tol: float | None = None) -> bool:
    return skew_deviation(a) <= _tol(a, tol)


@dataclass
class EigenSystem:
    """Ascending eigenvalues and orthonormal eigenvector columns."""

    values: np.ndarray
    vectors: np.ndarray


def fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-modulus entry is real positive.

    Makes repeated decompositions of identical input comparable; the
    remaining gauge freedom inside degenerate subspaces is handled by the
    consumers that care (sewing-matrix and smooth-gauge construction).
    """
    out = np.array(vectors, dtype=complex, copy=True)
    for j in range(out.shape[1]):
        i = int(np.argmax(np.abs(out[:, j])))
        z = out[i, j]
        if abs(z) > 0.0:
            out[:, j] *= np.conj(z) / abs(z)
    return out


def eigh(h: np.ndarray, tol: float | None = None) -> EigenSystem:
    """Eigendecomposition of a Hermitian matrix with fixed phases.

    Raises NonHermitian if the symmetry check fails at tolerance.
    """
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise NonHermitian(float("inf"))
    dev = hermitian_deviation(h)
    if dev > _tol(h, tol):
        raise NonHermitian(dev)
    values, vectors = np.linalg.eigh(h)
    return EigenSystem(values=values, vectors=fix_phases(vectors))


def pfaffian(a: np.ndarray, tol: float | None = None) -> complex:
    """Pfaffian of an even-dimensional complex skew-symmetric matrix.

    Skew-symmetric tridiagonalization with partial pivoting: Gauss
    transforms G with det(G) = 1 give pf(G A G^T) = pf(A), so the Pfaffian
    is the product of superdiagonal pivots times the swap parity.  O(n^3),
    stable at the dimensions used here.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotSkewSymmetric(float("inf"))
    n = a.shape[0]
    if n % 2 != 0:
        raise OddDimension(n)
    dev = skew_deviation(a)
    if dev > _tol(a, tol):
        raise NotSkewSymmetric(dev)
    if n == 0:
        return 1.0 + 0.0j

    A = 0.5 * (a - a.T)  # exact skew part; bounded change by the check above
    pf = 1.0 + 0.0j
    for k in range(0, n - 2, 2):
        kp = k + 1 + int(np.argmax(np.abs(A[k + 1:, k])))
        if kp != k + 1:
            A[[k + 1, kp], :] = A[[kp, k + 1], :]
            A[:, [k + 1, kp]] = A[:, [kp, k + 1]]
            pf = -pf
        pivot = A[k, k + 1]
        if pivot == 0.0:
            return 0.0 + 0.0j
        pf *= pivot
        tau = A[k, k + 2:] / pivot
        col = A[k + 2:, k + 1]
        A[k + 2:, k + 2:] += np.outer(tau, col) - np.outer(col, tau)
    return pf * A[n - 2, n - 1]


def pfaffian_sign(a: np.ndarray, tol: float = 1e-6) -> int:
    """Sign of a (phase-aligned, real) Pfaffian.

    Raises PfaffianNearZero if |pf| <= tol, the signature of an accidental
    gap closing at a fixed point.
    """
    pf = pfaffian(a)
    if abs(pf) <= tol:
        raise PfaffianNearZero(abs(pf))
    if abs(pf.imag) > tol * max(1.0, abs(pf.real)):
        raise PfaffianNearZero(abs(pf), where="complex Pfaffian; align phases first")
    return 1 if pf.real > 0 else -1
