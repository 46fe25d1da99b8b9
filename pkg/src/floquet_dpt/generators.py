"""Time-periodic generators of open-system dynamics.

A :class:`TimePeriodicGenerator` is the package's representation of a
periodic Liouvillian: a declared period plus the matrix-free action
``v -> L(t) v`` on column-stacked states.  Generators built from structured
terms (everything produced by :mod:`floquet_dpt.lindblad` and
:mod:`floquet_dpt.models`) additionally expose their term list, which the
compiled kernels consume and from which dense superoperators and Fourier
components can be materialized.  Arbitrary callables are accepted for
tests and custom dynamics; those propagate through the pure-Python path.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from . import _kernels
from ._kernels.terms import (
    PROFILE_CONST,
    PROFILE_EXP,
    PackedTerms,
    Term,
    pack_terms,
    profile_value,
)
from .linalg import kron

__all__ = ["TimePeriodicGenerator", "Term"]


def _identity_or(op: np.ndarray | None, dim: int) -> np.ndarray:
    return np.eye(dim, dtype=np.complex128) if op is None else np.asarray(op, dtype=np.complex128)


class TimePeriodicGenerator:
    """Periodic Liouvillian ``L(t)`` with ``L(t + T) = L(t)``.

    Exactly one of ``terms`` / ``action`` must be given.  ``dim`` is the
    Hilbert-space dimension (states are length ``dim**2``); it is required
    for term-structured generators.  ``lindblad_form`` records whether the
    generator is a bona-fide Lindbladian (complete positivity of the
    propagator is only guaranteed then).
    """

    def __init__(
        self,
        period: float,
        *,
        dim: int | None = None,
        terms: Sequence[Term] | None = None,
        action: Callable[[float, np.ndarray], np.ndarray] | None = None,
        lindblad_form: bool = True,
    ):
        if period <= 0:
            raise ValueError(f"period must be positive, got {period}")
        if (terms is None) == (action is None):
            raise ValueError("provide exactly one of terms= or action=")
        if terms is not None and dim is None:
            raise ValueError("dim is required for term-structured generators")
        self.period = float(period)
        self.dim = None if dim is None else int(dim)
        self.terms = None if terms is None else tuple(terms)
        self._action = action
        self.lindblad_form = bool(lindblad_form)
        self._packed: PackedTerms | None = None

    @property
    def packed(self) -> PackedTerms:
        if self.terms is None:
            raise TypeError("generator has no structured terms")
        if self._packed is None:
            self._packed = pack_terms(self.terms, self.dim)
        return self._packed

    @property
    def is_static(self) -> bool:
        """True when the action does not depend on t."""
        if self.terms is None:
            return False
        return all(t.profile == PROFILE_CONST for t in self.terms)

    def action(self, t: float, v: np.ndarray) -> np.ndarray:
        """Evaluate ``L(t) v`` on a column-stacked state."""
        if self.terms is None:
            return np.asarray(self._action(t, v), dtype=np.complex128)
        v = np.ascontiguousarray(v, dtype=np.complex128)
        out = np.empty_like(v)
        _kernels.apply_terms(self.packed, float(t), v, out)
        return out

    def to_dense(self, t: float = 0.0) -> np.ndarray:
        """Materialize the superoperator at time t (column-stacking form)."""
        if self.terms is None:
            raise TypeError("cannot materialize a callable-only generator; "
                            "probe its action on a basis instead")
        d = self.dim
        out = np.zeros((d * d, d * d), dtype=np.complex128)
        for term in self.terms:
            c = term.coeff * profile_value(term.profile, term.omega, t)
            if c == 0.0:
                continue
            left = _identity_or(term.left, d)
            right = _identity_or(term.right, d)
            out += c * kron(right.T, left)
        return out

    def fourier_components(self) -> dict[int, "TimePeriodicGenerator"] | None:
        """Split into harmonics of the base frequency 2*pi/T.

        Returns ``{h: L_h}`` with the action equal to
        ``sum_h L_h exp(1j*h*omega*t)`` identically, or ``None`` when the
        terms are not harmonics of the declared period (or the generator is
        callable-only).
        """
        if self.terms is None:
            return None
        omega_ref = 2.0 * np.pi / self.period
        buckets: dict[int, list[Term]] = {}

        def add(h: int, coeff, left, right):
            buckets.setdefault(h, []).append(Term(coeff, PROFILE_CONST, 0.0, left, right))

        for term in self.terms:
            if term.profile == PROFILE_CONST:
                add(0, term.coeff, term.left, term.right)
                continue
            h_real = term.omega / omega_ref
            h = int(round(h_real))
            if abs(h_real - h) > 1e-9 or h == 0:
                return None
            if term.profile == PROFILE_EXP:
                add(h, term.coeff, term.left, term.right)
            else:  # cos = (e^{i w t} + e^{-i w t}) / 2
                add(h, term.coeff / 2.0, term.left, term.right)
                add(-h, term.coeff / 2.0, term.left, term.right)
        return {
            h: TimePeriodicGenerator(self.period, dim=self.dim, terms=tuple(ts),
                                     lindblad_form=self.lindblad_form)
            for h, ts in sorted(buckets.items())
        }
