"""Liouvillian assembly: standard Lindblad form and the dressed-basis
generalized master equation (GME) with an Ohmic bath.

All superoperators follow the column-stacking convention of
:mod:`floquet_dpt.linalg`: the Liouvillian of Hamiltonian ``H`` and
collapse operators ``L_j`` is

    -1j*(kron(I, H) - kron(H.T, I))
    + sum_j [ kron(conj(L_j), L_j)
              - 1/2 kron(I, L_j^dag L_j) - 1/2 kron((L_j^dag L_j).T, I) ]

but the production path never materializes it; generators carry structured
terms that the kernels apply matrix-free.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ._kernels.terms import PROFILE_CONST, PROFILE_COS, PROFILE_EXP, Term
from .generators import TimePeriodicGenerator
from .linalg import dagger, require_hermitian, unvec, vec
from .operators import dressed_basis

__all__ = [
    "CollapseOp",
    "OhmicBath",
    "StaticLiouvillian",
    "dissipator_action",
    "lindblad_terms",
    "liouvillian",
    "time_dependent_liouvillian",
    "gme_generator",
]


@dataclass(frozen=True)
class CollapseOp:
    """Collapse operator with the rate already folded in (sqrt(kappa)*a style)."""

    operator: np.ndarray

    def __post_init__(self):
        op = np.asarray(self.operator, dtype=np.complex128)
        if op.ndim != 2 or op.shape[0] != op.shape[1]:
            raise ValueError(f"collapse operator must be square, got {op.shape}")
        object.__setattr__(self, "operator", op)


@dataclass(frozen=True)
class OhmicBath:
    """Ohmic spectral density ``rate(w) = kappa * w / omega_ref`` at T = 0.

    Rates are only meaningful for positive transition frequencies; exact
    degeneracies (|w| below ``degeneracy_tol * omega_ref``) contribute zero.
    """

    kappa: float
    omega_ref: float
    degeneracy_tol: float = 1e-9

    def __post_init__(self):
        if self.kappa <= 0 or self.omega_ref <= 0:
            raise ValueError("kappa and omega_ref must be positive")

    def rate(self, omega: float) -> float:
        if omega < -self.degeneracy_tol * self.omega_ref:
            raise ValueError(f"zero-temperature bath evaluated at negative frequency {omega}")
        if omega <= self.degeneracy_tol * self.omega_ref:
            return 0.0
        return self.kappa * omega / self.omega_ref


def _as_operator(lop) -> np.ndarray:
    return lop.operator if isinstance(lop, CollapseOp) else np.asarray(lop, dtype=np.complex128)


def dissipator_action(lop, rho: np.ndarray) -> np.ndarray:
    """D[L] rho = L rho L^dag - 1/2 {L^dag L, rho}."""
    op = _as_operator(lop)
    rho = np.asarray(rho, dtype=np.complex128)
    if op.shape != rho.shape:
        raise ValueError(f"shape mismatch: L {op.shape} vs rho {rho.shape}")
    ldl = dagger(op) @ op
    return op @ rho @ dagger(op) - 0.5 * (ldl @ rho + rho @ ldl)


def lindblad_terms(
    h_static: np.ndarray | None,
    collapse: Sequence[CollapseOp] = (),
    h_harmonics: Sequence[tuple[int, float, np.ndarray]] = (),
) -> list[Term]:
    """Structured terms of a Lindblad generator.

    ``h_harmonics`` lists extra Hamiltonian pieces with a time profile:
    ``(PROFILE_COS, omega, Hd)`` contributes ``cos(omega t) * Hd`` and
    ``(PROFILE_EXP, omega, Hd)`` contributes ``exp(1j omega t) * Hd``.
    Harmonic pieces need not be Hermitian on their own as long as the total
    Hamiltonian is (e.g. ``X^+ e^{iwt} + X^- e^{-iwt}`` split in two).
    """
    terms: list[Term] = []

    def commutator(profile, omega, h):
        terms.append(Term(-1j, profile, omega, np.asarray(h, np.complex128), None))
        terms.append(Term(+1j, profile, omega, None, np.asarray(h, np.complex128)))

    if h_static is not None:
        commutator(PROFILE_CONST, 0.0, h_static)
    for profile, omega, h in h_harmonics:
        commutator(profile, omega, h)
    for lop in collapse:
        op = _as_operator(lop)
        ldl = dagger(op) @ op
        terms.append(Term(1.0, PROFILE_CONST, 0.0, op, dagger(op)))
        terms.append(Term(-0.5, PROFILE_CONST, 0.0, ldl, None))
        terms.append(Term(-0.5, PROFILE_CONST, 0.0, None, ldl))
    return terms


class StaticLiouvillian:
    """Time-independent Liouvillian: matrix-free action plus dense form."""

    def __init__(self, h: np.ndarray, collapse: Sequence[CollapseOp] = ()):
        h = require_hermitian(np.asarray(h, dtype=np.complex128), 1e-10, "Hamiltonian")
        self.dim = h.shape[0]
        self.terms = tuple(lindblad_terms(h, collapse))
        # a throwaway period; the static generator never uses it
        self._gen = TimePeriodicGenerator(1.0, dim=self.dim, terms=self.terms)

    def action(self, v: np.ndarray) -> np.ndarray:
        """Matrix-free ``L @ v`` on a column-stacked state."""
        return self._gen.action(0.0, v)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """Action on a density matrix."""
        return unvec(self.action(vec(rho)), *rho.shape)

    def to_dense(self) -> np.ndarray:
        """Materialized superoperator (dense oracle; dims kept small by caller)."""
        return self._gen.to_dense(0.0)

    def as_periodic(self, period: float, lindblad_form: bool = True) -> TimePeriodicGenerator:
        """Wrap with a declared period for uniform Floquet handling."""
        return TimePeriodicGenerator(period, dim=self.dim, terms=self.terms,
                                     lindblad_form=lindblad_form)


def liouvillian(h: np.ndarray, collapse: Sequence[CollapseOp] = ()) -> StaticLiouvillian:
    """Standard Lindblad Liouvillian for static ``H`` and collapse list."""
    return StaticLiouvillian(h, collapse)


def time_dependent_liouvillian(
    h_of_t: Callable[[float], np.ndarray],
    collapse: Sequence[CollapseOp],
    period: float,
) -> TimePeriodicGenerator:
    """Generator for an arbitrary periodic Hamiltonian callable.

    The action at time t equals ``liouvillian(h_of_t(t), collapse)`` applied
    matrix-free.  Arbitrary callables cannot be term-structured, so this
    travels the pure-Python propagation path; the model constructors in
    :mod:`floquet_dpt.models` build structured generators instead.
    """
    collapse = tuple(collapse)
    ops = [_as_operator(lop) for lop in collapse]
    ldls = [dagger(op) @ op for op in ops]

    def action(t: float, v: np.ndarray) -> np.ndarray:
        h = np.asarray(h_of_t(t), dtype=np.complex128)
        rho = unvec(v, h.shape[0], h.shape[1])
        drho = -1j * (h @ rho - rho @ h)
        for op, ldl in zip(ops, ldls):
            drho += op @ rho @ dagger(op) - 0.5 * (ldl @ rho + rho @ ldl)
        return vec(drho)

    dim = np.asarray(h_of_t(0.0)).shape[0]
    return TimePeriodicGenerator(period, dim=dim, action=action)


def gme_generator(
    h: np.ndarray,
    coupling: np.ndarray,
    m: int,
    bath: OhmicBath,
    drive: tuple[float, float],
) -> TimePeriodicGenerator:
    """Dressed-basis generalized master equation generator.

    ``h`` is the system Hamiltonian on the full space and ``coupling`` the
    system side of the system-bath interaction (the cavity quadrature
    ``1j*(a - a^dag)`` for the models in this package).  The lowest ``m``
    dressed levels are kept.  With transition operators
    ``X[j,k] = <j|coupling|k>`` for ``k > j`` (energy-ordered, so all
    retained transition frequencies are nonnegative), the time-independent
    part is

        L0 rho = -1j [Hd, rho] + 1/2 (W rho S^dag - S^dag W rho
                                      + S rho W^dag - rho W^dag S)

    where ``S`` sums the ``X[j,k]`` and ``W`` sums them weighted by the
    bath rate at the transition frequency.  This is the exact factored form
    of the non-secular double-sum dissipator over transition pairs (the
    tests compare against the explicit quadruple sum).  The drive
    ``(F, omega_d)`` adds ``-1j*F*[S, .]`` and ``-1j*F*[S^dag, .]`` rotating
    at ``exp(+-1j*omega_d*t)``; the returned generator is exactly the
    three-harmonic sum and reduces to the standard Lindblad equation with
    ``sqrt(kappa)*a`` in the uncoupled limit.

    The GME is not guaranteed to be of Lindblad form, so the propagator is
    flagged as potentially non-completely-positive; positivity of evolved
    states is monitored downstream, not asserted.
    """
    if m < 2:
        raise ValueError("GME needs at least 2 dressed levels")
    f_amp, omega_d = drive
    if omega_d <= 0:
        raise ValueError("drive frequency must be positive")
    energies, vectors = dressed_basis(h, m)
    x_full = dagger(vectors) @ np.asarray(coupling, dtype=np.complex128) @ vectors
    s_op = np.triu(x_full, k=1)
    rates = np.zeros((m, m), dtype=np.float64)
    for j in range(m):
        for k in range(j + 1, m):
            rates[j, k] = bath.rate(energies[k] - energies[j])
    w_op = rates * s_op

    h_dressed = np.diag(energies).astype(np.complex128)
    terms = [
        Term(-1j, PROFILE_CONST, 0.0, h_dressed, None),
        Term(+1j, PROFILE_CONST, 0.0, None, h_dressed),
        Term(0.5, PROFILE_CONST, 0.0, w_op, dagger(s_op)),
        Term(-0.5, PROFILE_CONST, 0.0, dagger(s_op) @ w_op, None),
        Term(0.5, PROFILE_CONST, 0.0, s_op, dagger(w_op)),
        Term(-0.5, PROFILE_CONST, 0.0, None, dagger(w_op) @ s_op),
    ]
    if f_amp != 0.0:
        for op, sign in ((s_op, +1.0), (dagger(s_op), -1.0)):
            terms.append(Term(-1j * f_amp, PROFILE_EXP, sign * omega_d, op, None))
            terms.append(Term(+1j * f_amp, PROFILE_EXP, sign * omega_d, None, op))
    period = 2.0 * np.pi / omega_d
    return TimePeriodicGenerator(period, dim=m, terms=terms, lindblad_form=False)
