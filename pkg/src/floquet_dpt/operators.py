"""Truncated bosonic and two-level operators, composition, dressed bases."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import dagger, kron, require_hermitian

__all__ = [
    "FockSpace",
    "TwoLevelSpace",
    "CompositeSpace",
    "destroy",
    "create",
    "number",
    "pauli",
    "embed",
    "dressed_basis",
    "fix_phases",
]


@dataclass(frozen=True)
class FockSpace:
    """Bosonic mode truncated to states |0> .. |cutoff-1>."""

    cutoff: int

    def __post_init__(self):
        if self.cutoff < 2:
            raise ValueError(f"Fock cutoff must be >= 2, got {self.cutoff}")

    @property
    def dim(self) -> int:
        return self.cutoff


@dataclass(frozen=True)
class TwoLevelSpace:
    """A single two-level system."""

    @property
    def dim(self) -> int:
        return 2


@dataclass(frozen=True)
class CompositeSpace:
    """Ordered tensor product; slot 0 is the leftmost Kronecker factor."""

    factors: tuple

    def __post_init__(self):
        if not self.factors:
            raise ValueError("composite space needs at least one factor")

    @property
    def dim(self) -> int:
        d = 1
        for f in self.factors:
            d *= f.dim
        return d


def _cutoff(space) -> int:
    if isinstance(space, FockSpace):
        return space.cutoff
    if isinstance(space, (int, np.integer)):
        return int(space)
    raise TypeError(f"expected FockSpace or integer cutoff, got {space!r}")


def destroy(space) -> np.ndarray:
    """Annihilation operator, <n-1|a|n> = sqrt(n)."""
    c = _cutoff(space)
    if c < 2:
        raise ValueError("cutoff must be >= 2")
    return np.diag(np.sqrt(np.arange(1, c, dtype=np.float64)), k=1).astype(np.complex128)


def create(space) -> np.ndarray:
    return dagger(destroy(space))


def number(space) -> np.ndarray:
    c = _cutoff(space)
    return np.diag(np.arange(c, dtype=np.float64)).astype(np.complex128)


_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
    "+": np.array([[0, 1], [0, 0]], dtype=np.complex128),
    "-": np.array([[0, 0], [1, 0]], dtype=np.complex128),
}


def pauli(which: str) -> np.ndarray:
    """Pauli matrix; sigma_pm = (sigma_x +- 1j sigma_y)/2."""
    try:
        return _PAULI[which].copy()
    except KeyError:
        raise ValueError(f"unknown Pauli label {which!r}; use x, y, z, + or -") from None


def embed(op: np.ndarray, slot: int, space: CompositeSpace) -> np.ndarray:
    """Lift a single-factor operator to the composite space (identity elsewhere)."""
    op = np.asarray(op, dtype=np.complex128)
    dims = [f.dim for f in space.factors]
    if not 0 <= slot < len(dims):
        raise ValueError(f"slot {slot} out of range for {len(dims)} factors")
    if op.shape != (dims[slot], dims[slot]):
        raise ValueError(f"operator shape {op.shape} does not match factor dim {dims[slot]}")
    out = np.array([[1.0 + 0.0j]])
    for i, d in enumerate(dims):
        out = kron(out, op if i == slot else np.eye(d, dtype=np.complex128))
    return out


def fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real positive.

    Idempotent; ties resolved by the first maximal entry.
    """
    vectors = np.array(vectors, dtype=np.complex128, copy=True)
    for j in range(vectors.shape[1]):
        col = vectors[:, j]
        i = int(np.argmax(np.abs(col)))
        a = col[i]
        if a != 0:
            vectors[:, j] = col * (np.conj(a) / abs(a))
    return vectors


def dressed_basis(h: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Lowest ``m`` eigenpairs of a Hermitian operator, ascending.

    Returns ``(energies, vectors)`` with orthonormal columns and the phase
    convention of :func:`fix_phases`.  Exactly degenerate blocks keep the
    (orthonormal) basis the eigensolver returns; downstream quantities are
    covariant under that choice.
    """
    h = np.asarray(h, dtype=np.complex128)
    require_hermitian(h, tol=1e-10, name="dressed-basis Hamiltonian")
    if not 1 <= m <= h.shape[0]:
        raise ValueError(f"need 1 <= m <= dim, got m={m}, dim={h.shape[0]}")
    energies, vectors = np.linalg.eigh(h)
    return energies[:m].astype(np.float64), fix_phases(vectors[:, :m])
