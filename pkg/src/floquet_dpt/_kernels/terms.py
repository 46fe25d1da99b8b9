"""Structured superoperator terms.

A time-periodic Liouvillian is represented as a sum of terms

    rho  ->  coeff * h(t) * (L @ rho @ R)

where ``h`` is one of ``1``, ``cos(omega*t)`` or ``exp(1j*omega*t)`` and
either side may be the identity.  Acting on column-stacked states this is
``coeff*h(t) * kron(R.T, L)``, but the kernels never materialize that
matrix: each side is classified as diagonal, a single off-diagonal band,
or dense, and applied with the cheapest loop available.  Operators whose
entries occupy a few off-diagonals (ladder operators and their products)
are split into one term per band so that the whole right-hand side costs
O(D^2) instead of O(D^3).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "PROFILE_CONST",
    "PROFILE_COS",
    "PROFILE_EXP",
    "OP_NONE",
    "OP_DIAG",
    "OP_BAND",
    "OP_DENSE",
    "Term",
    "PackedTerms",
    "pack_terms",
    "profile_value",
]

PROFILE_CONST = 0
PROFILE_COS = 1   # cos(omega * t)
PROFILE_EXP = 2   # exp(1j * omega * t), omega signed

OP_NONE = 0
OP_DIAG = 1
OP_BAND = 2
OP_DENSE = 3

# A side with more nonzero diagonals than this stays dense; band splitting
# of a single term is capped so a dense x dense product never explodes into
# a long list of band pairs.
_MAX_BANDS = 6
_MAX_SPLIT = 9


@dataclass(frozen=True)
class Term:
    """One superoperator term ``coeff * h(t) * L @ rho @ R``."""

    coeff: complex
    profile: int = PROFILE_CONST
    omega: float = 0.0
    left: np.ndarray | None = None
    right: np.ndarray | None = None

    def __post_init__(self):
        if self.profile not in (PROFILE_CONST, PROFILE_COS, PROFILE_EXP):
            raise ValueError(f"unknown profile {self.profile}")
        if self.profile == PROFILE_CONST and self.omega != 0.0:
            raise ValueError("constant profile must have omega == 0")


def profile_value(profile: int, omega: float, t: float) -> complex:
    if profile == PROFILE_CONST:
        return 1.0
    if profile == PROFILE_COS:
        return np.cos(omega * t)
    return complex(np.cos(omega * t), np.sin(omega * t))


def _nonzero_offsets(mat: np.ndarray) -> list[int]:
    d = mat.shape[0]
    return [o for o in range(-(d - 1), d) if np.any(np.diagonal(mat, o))]


def _padded_band(mat: np.ndarray, off: int) -> np.ndarray:
    """Length-D vector w with w[r] = mat[r, r+off] on the valid row range."""
    d = mat.shape[0]
    w = np.zeros(d, dtype=np.complex128)
    vals = np.diagonal(mat, off)
    if off >= 0:
        w[: d - off] = vals
    else:
        w[-off:] = vals
    return w


def _side_factors(mat: np.ndarray | None) -> list[tuple[int, int, np.ndarray | None]]:
    """Split one side into (kind, band_offset, payload) factors.

    The factors sum exactly to the input operator.  ``None`` (identity)
    yields a single OP_NONE factor; the zero operator yields no factors.
    """
    if mat is None:
        return [(OP_NONE, 0, None)]
    mat = np.asarray(mat, dtype=np.complex128)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"term operators must be square, got {mat.shape}")
    offs = _nonzero_offsets(mat)
    if not offs:
        return []
    if offs == [0]:
        return [(OP_DIAG, 0, np.ascontiguousarray(np.diagonal(mat)).astype(np.complex128))]
    if len(offs) > _MAX_BANDS:
        return [(OP_DENSE, 0, mat)]
    out = []
    for o in offs:
        if o == 0:
            out.append((OP_DIAG, 0, np.ascontiguousarray(np.diagonal(mat)).astype(np.complex128)))
        else:
            out.append((OP_BAND, o, _padded_band(mat, o)))
    return out


class PackedTerms:
    """Flat-array form of a term list, shared by both kernel backends.

    Dense factors are stored transposed so that each (D, D) block is the
    original operator in column-major (BLAS) layout; vectorized states are
    column-stacked, hence a state vector reinterpreted as a column-major
    D x D block *is* the density matrix.
    """

    def __init__(self, dim: int, rows):
        self.dim = int(dim)
        self.n = self.dim * self.dim
        m = len(rows)
        self.n_terms = m
        self.coeff = np.empty(m, dtype=np.complex128)
        self.profile = np.empty(m, dtype=np.int32)
        self.omega = np.empty(m, dtype=np.float64)
        self.lkind = np.empty(m, dtype=np.int32)
        self.rkind = np.empty(m, dtype=np.int32)
        self.loff = np.zeros(m, dtype=np.int32)
        self.roff = np.zeros(m, dtype=np.int32)
        self.lidx = np.full(m, -1, dtype=np.int32)
        self.ridx = np.full(m, -1, dtype=np.int32)

        vec_payloads: list[np.ndarray] = []
        dense_payloads: list[np.ndarray] = []

        def vec_slot(payload):
            vec_payloads.append(payload)
            return len(vec_payloads) - 1

        def dense_slot(payload):
            dense_payloads.append(np.ascontiguousarray(payload.T))
            return len(dense_payloads) - 1

        for i, (coeff, profile, omega, (lk, lo, lp), (rk, ro, rp)) in enumerate(rows):
            self.coeff[i] = coeff
            self.profile[i] = profile
            self.omega[i] = omega
            self.lkind[i] = lk
            self.rkind[i] = rk
            self.loff[i] = lo
            self.roff[i] = ro
            if lk in (OP_DIAG, OP_BAND):
                self.lidx[i] = vec_slot(lp)
            elif lk == OP_DENSE:
                self.lidx[i] = dense_slot(lp)
            if rk in (OP_DIAG, OP_BAND):
                self.ridx[i] = vec_slot(rp)
            elif rk == OP_DENSE:
                self.ridx[i] = dense_slot(rp)

        d = self.dim
        self.vecs = (
            np.ascontiguousarray(np.stack(vec_payloads))
            if vec_payloads
            else np.zeros((0, d), dtype=np.complex128)
        )
        self.denses = (
            np.ascontiguousarray(np.stack(dense_payloads))
            if dense_payloads
            else np.zeros((0, d, d), dtype=np.complex128)
        )
        self.has_dense = bool(dense_payloads)
        self.static = bool(np.all(self.profile == PROFILE_CONST))

    def dense_op(self, idx: int) -> np.ndarray:
        """Original (row-major) dense operator stored at slot ``idx``."""
        return self.denses[idx].T


def pack_terms(terms, dim: int) -> PackedTerms:
    """Classify, split and flatten a ``Term`` list for the kernels."""
    rows = []
    for term in terms:
        if term.coeff == 0:
            continue
        lfs = _side_factors(term.left)
        rfs = _side_factors(term.right)
        if not lfs or not rfs:
            continue
        if len(lfs) * len(rfs) > _MAX_SPLIT:
            # keep the split from exploding: collapse the busier side
            if len(lfs) >= len(rfs):
                lfs = [(OP_DENSE, 0, np.asarray(term.left, dtype=np.complex128))]
            else:
                rfs = [(OP_DENSE, 0, np.asarray(term.right, dtype=np.complex128))]
        for lf in lfs:
            for rf in rfs:
                rows.append((complex(term.coeff), term.profile, float(term.omega), lf, rf))
    return PackedTerms(dim, rows)
