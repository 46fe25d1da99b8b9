"""Complex linear-algebra primitives shared by every solver layer.

Everything here operates on plain ``numpy.ndarray`` objects with
``complex128`` entries (dense, row-major) or ``scipy.sparse.csr_matrix``
for the sparse variant.  The density-matrix vectorization used throughout
the package is **column stacking**::

    vec([[a, b],
         [c, d]]) = (a, c, b, d)

so that ``vec(A @ rho @ B) == kron(B.T, A) @ vec(rho)``.  All superoperator
formulas elsewhere in the package assume this convention.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg
import scipy.sparse

__all__ = [
    "kron",
    "vec",
    "unvec",
    "expm",
    "hermiticity_defect",
    "is_hermitian",
    "require_hermitian",
    "to_csr",
    "dagger",
]


def dagger(a: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return np.conj(a.T)


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product, ``(A (x) B)[i*p+k, j*q+l] = A[i,j] * B[k,l]``."""
    return np.kron(np.asarray(a), np.asarray(b))


def vec(rho: np.ndarray) -> np.ndarray:
    """Column-stack a matrix into a vector."""
    rho = np.asarray(rho)
    if rho.ndim != 2:
        raise ValueError(f"vec expects a matrix, got shape {rho.shape}")
    return rho.reshape(-1, order="F").astype(np.complex128, copy=False)


def unvec(v: np.ndarray, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    """Inverse of :func:`vec`; square by default."""
    v = np.asarray(v).ravel()
    if rows is None:
        rows = int(round(np.sqrt(v.size)))
        cols = rows
    if cols is None:
        cols = rows
    if rows * cols != v.size:
        raise ValueError(f"cannot unvec length-{v.size} vector into {rows}x{cols}")
    return v.reshape((rows, cols), order="F")


def expm(a: np.ndarray) -> np.ndarray:
    """Matrix exponential (scaling-and-squaring with a degree-adaptive core).

    Used by the dense brute-force oracles and the tests; the production
    propagation path never materializes superoperator exponentials.
    """
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expm expects a square matrix, got shape {a.shape}")
    return scipy.linalg.expm(a)


def hermiticity_defect(a: np.ndarray) -> float:
    """``max|A - A^dagger|`` entrywise."""
    a = np.asarray(a)
    return float(np.max(np.abs(a - dagger(a)))) if a.size else 0.0


def is_hermitian(a: np.ndarray, tol: float = 1e-10) -> bool:
    return hermiticity_defect(a) <= tol


def require_hermitian(a: np.ndarray, tol: float = 1e-10, name: str = "matrix") -> np.ndarray:
    defect = hermiticity_defect(a)
    if defect > tol:
        raise ValueError(f"{name} is not Hermitian (defect {defect:.3e} > {tol:.1e})")
    return a


def to_csr(a: np.ndarray) -> scipy.sparse.csr_matrix:
    """Dense to compressed-row sparse with sorted column indices."""
    m = scipy.sparse.csr_matrix(np.asarray(a, dtype=np.complex128))
    m.sort_indices()
    return m
