"""Model catalog: n-photon driven Kerr resonators (full and RWA), the
driven Jaynes-Cummings model, and the driven quantum Rabi model with its
dressed-basis generalized master equation.

All rates are quoted in units of the single-photon loss rate (kappa = 1 is
the canonical choice); times are then in units of 1/kappa.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ._kernels.terms import PROFILE_COS
from .errors import ConfigError
from .floquet import SymmetrySpec
from .generators import TimePeriodicGenerator
from .lindblad import CollapseOp, OhmicBath, gme_generator, lindblad_terms, liouvillian
from .linalg import dagger
from .operators import (
    CompositeSpace,
    FockSpace,
    TwoLevelSpace,
    destroy,
    dressed_basis,
    embed,
    number,
    pauli,
)

__all__ = [
    "KerrParams",
    "RabiParams",
    "rescale_thermo",
    "kerr_full",
    "kerr_rwa",
    "kerr_symmetry",
    "jcm_total",
    "qrm_hamiltonian",
    "qrm_quadrature",
    "qrm_drive_ops",
    "qrm_gme",
    "dressed_level_count",
    "observable",
]


@dataclass(frozen=True)
class KerrParams:
    """Kerr resonator with an n-photon drive.

    ``u_tilde`` and ``f_tilde`` are the rescaled nonlinearity and drive
    amplitude; the physical values follow from :func:`rescale_thermo` with
    the thermodynamic scale ``thermo_n``.  Give either the drive frequency
    ``omega_d`` or the detuning ``delta = omega0 - omega_d/n``.
    """

    omega0: float
    u_tilde: float
    f_tilde: float
    n: int = 1
    omega_d: float | None = None
    delta: float | None = None
    kappa: float = 1.0
    eta: float = 0.0
    thermo_n: float = 1.0
    cutoff: int = 20

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError(f"drive order n must be 1 or 2, got {self.n}")
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")
        if self.eta < 0:
            raise ValueError("eta must be nonnegative")
        if self.thermo_n <= 0:
            raise ValueError("thermodynamic scale must be positive")
        if self.cutoff < 2:
            raise ValueError("cutoff must be >= 2")
        if (self.omega_d is None) == (self.delta is None):
            raise ValueError("give exactly one of omega_d / delta")
        if self.omega_d is None:
            object.__setattr__(self, "omega_d", self.n * (self.omega0 - self.delta))
        else:
            object.__setattr__(self, "delta", self.omega0 - self.omega_d / self.n)
        if self.omega_d <= 0:
            raise ValueError(f"resolved drive frequency must be positive, got {self.omega_d}")

    @property
    def period(self) -> float:
        return 2.0 * np.pi / self.omega_d


def rescale_thermo(p: KerrParams) -> tuple[float, float]:
    """Physical (U, F_n) from the rescaled parameters.

    ``U = u_tilde / N`` always; the single-photon drive scales as
    ``F_1 = f_tilde * sqrt(N)`` while the two-photon drive is unscaled.
    """
    u = p.u_tilde / p.thermo_n
    f = p.f_tilde * np.sqrt(p.thermo_n) if p.n == 1 else p.f_tilde
    return u, f


def _kerr_operators(p: KerrParams):
    a = destroy(p.cutoff)
    u, f = rescale_thermo(p)
    nphot = number(p.cutoff)
    kerr = 0.5 * u * (dagger(a) @ dagger(a) @ a @ a)
    a_n = np.linalg.matrix_power(a, p.n)
    drive = a_n + dagger(a_n)
    collapse = [CollapseOp(np.sqrt(p.kappa) * a)]
    if p.eta > 0:
        collapse.append(CollapseOp(np.sqrt(p.eta) * a_n))
    return nphot, kerr, drive, collapse, f


def kerr_full(p: KerrParams) -> TimePeriodicGenerator:
    """Lab-frame generator: H(t) = w0 n + U/2 ad^2 a^2 + 2 F_n cos(wd t)(a^n + ad^n).

    Losses: sqrt(kappa) a always, sqrt(eta) a^n when eta > 0.
    """
    nphot, kerr, drive, collapse, f = _kerr_operators(p)
    h0 = p.omega0 * nphot + kerr
    terms = lindblad_terms(h0, collapse,
                           h_harmonics=[(PROFILE_COS, p.omega_d, 2.0 * f * drive)])
    return TimePeriodicGenerator(p.period, dim=p.cutoff, terms=terms)


def kerr_rwa(p: KerrParams) -> TimePeriodicGenerator:
    """Drive-frame generator after the rotating-wave approximation.

    H = Delta n + U/2 ad^2 a^2 + F_n (a^n + ad^n); time-independent but
    wrapped with the drive period for uniform Floquet handling.  The drive
    term carries half the peak amplitude of the lab-frame model.
    """
    nphot, kerr, drive, collapse, f = _kerr_operators(p)
    h = p.delta * nphot + kerr + f * drive
    return liouvillian(h, collapse).as_periodic(p.period)


def kerr_symmetry(p: KerrParams) -> SymmetrySpec | None:
    """Weak Z_n symmetry of the n-photon driven model (n >= 2)."""
    if p.n < 2:
        return None
    return SymmetrySpec(p.n, np.arange(p.cutoff))


@dataclass(frozen=True)
class RabiParams:
    """Driven light-matter models: a two-level system and one bosonic mode.

    ``variant`` selects the Jaynes-Cummings model (drive frame, standard
    Lindblad loss) or the quantum Rabi model with the dressed-basis GME.
    ``m_levels`` is the dressed-level count for the GME; ``None`` resolves
    it from the cutoff-convergence rule in :func:`dressed_level_count`.
    """

    omega_c: float
    omega_q: float
    g: float
    f_drive: float = 0.0
    omega_d: float | None = None
    kappa: float = 1.0
    cutoff: int = 40
    m_levels: int | None = None
    variant: str = "jcm"

    def __post_init__(self):
        if self.variant not in ("jcm", "qrm_gme"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if min(self.omega_c, self.omega_q) <= 0:
            raise ValueError("frequencies must be positive")
        if self.omega_d is None:
            object.__setattr__(self, "omega_d", self.omega_c)
        if self.omega_d <= 0:
            raise ValueError("drive frequency must be positive")
        if self.g < 0 or self.f_drive < 0:
            raise ValueError("g and F must be nonnegative")
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")
        if self.cutoff < 2:
            raise ValueError("cutoff must be >= 2")

    @property
    def f_tilde(self) -> float:
        """Rescaled drive 2F/g, the canonical sweep coordinate."""
        if self.g == 0:
            raise ZeroDivisionError("f_tilde undefined at g = 0")
        return 2.0 * self.f_drive / self.g

    @property
    def period(self) -> float:
        return 2.0 * np.pi / self.omega_d

    @property
    def space(self) -> CompositeSpace:
        return CompositeSpace((TwoLevelSpace(), FockSpace(self.cutoff)))


def _rabi_ops(p: RabiParams):
    space = p.space
    a = embed(destroy(p.cutoff), 1, space)
    sz = embed(pauli("z"), 0, space)
    sp = embed(pauli("+"), 0, space)
    sx = embed(pauli("x"), 0, space)
    return a, sz, sp, sx


def jcm_total(p: RabiParams) -> TimePeriodicGenerator:
    """Driven Jaynes-Cummings model in the drive frame (transcribed as
    ``H_JCM - wd*n + F(a + ad)``), with single-photon loss sqrt(kappa) a.

    Time-independent; wrapped with the drive period.
    """
    if p.variant != "jcm":
        raise ValueError("jcm_total requires variant='jcm'")
    a, sz, sp, _ = _rabi_ops(p)
    nphot = dagger(a) @ a
    h = (p.omega_c * nphot + 0.5 * p.omega_q * sz
         + p.g * (sp @ a + dagger(sp @ a))
         - p.omega_d * nphot
         + p.f_drive * (a + dagger(a)))
    loss = CollapseOp(np.sqrt(p.kappa) * a)
    return liouvillian(h, [loss]).as_periodic(p.period)


def qrm_hamiltonian(p: RabiParams) -> np.ndarray:
    """Quantum Rabi Hamiltonian wc n + wq/2 sz + g (a + ad) sx."""
    a, sz, _, sx = _rabi_ops(p)
    return p.omega_c * dagger(a) @ a + 0.5 * p.omega_q * sz + p.g * (a + dagger(a)) @ sx


def qrm_quadrature(p: RabiParams) -> np.ndarray:
    """System side of the bath coupling, 1j*(a - ad) on the full space."""
    a, _, _, _ = _rabi_ops(p)
    return 1j * (a - dagger(a))


def dressed_level_count(p: RabiParams, min_levels: int = 12, max_levels: int = 24,
                        shift_tol: float = 1e-6) -> int:
    """Resolve the dressed-level count M.

    Counts levels whose energies move by less than ``shift_tol * omega_c``
    when the Fock cutoff grows by 25%, clips to [2, max_levels], then
    extends M so it never splits a near-degenerate pair (important in the
    uncoupled and deep-strong-coupling limits, whose spectra pair up).
    """
    if p.m_levels is not None:
        if not 2 <= p.m_levels <= 2 * p.cutoff:
            raise ValueError(f"m_levels must be in [2, {2 * p.cutoff}]")
        return p.m_levels
    h1 = qrm_hamiltonian(p)
    bigger = RabiParams(**{**p.__dict__, "cutoff": int(np.ceil(1.25 * p.cutoff))})
    h2 = qrm_hamiltonian(bigger)
    e1 = np.linalg.eigvalsh(h1)
    e2 = np.linalg.eigvalsh(h2)
    shifts = np.abs(e1 - e2[: e1.size])
    moved = shifts > shift_tol * p.omega_c
    converged = int(np.argmax(moved)) if moved.any() else e1.size
    if converged < min_levels:
        warnings.warn(f"only {converged} dressed levels converged; "
                      f"increase the cutoff (using {max(2, converged)})")
    m = int(np.clip(converged, 2, max_levels))
    # never cut inside a (near-)degenerate shell
    while m < min(converged, 2 * p.cutoff) and e1[m] - e1[m - 1] < 1e-6 * p.omega_c:
        m += 1
    return m


def qrm_drive_ops(p: RabiParams) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Dressed-basis drive and output-field operators.

    Returns ``(X_plus, X_minus, XX_plus, XX_minus)`` over the lowest M
    dressed levels: ``X_plus`` collects the quadrature matrix elements
    ``<j|1j(a - ad)|k>`` for energy-ordered ``k > j`` (hence strictly upper
    triangular), ``X_minus`` is its adjoint, and the output-field versions
    weight each transition by ``(w_k - w_j)/w_c`` with an extra ``-1j``.
    """
    m = dressed_level_count(p)
    energies, vectors = dressed_basis(qrm_hamiltonian(p), m)
    x = dagger(vectors) @ qrm_quadrature(p) @ vectors
    x_plus = np.triu(x, k=1)
    weights = (energies[None, :] - energies[:, None]) / p.omega_c
    xx_plus = -1j * np.triu(weights * x, k=1)
    return x_plus, dagger(x_plus), xx_plus, dagger(xx_plus)


def qrm_gme(p: RabiParams) -> TimePeriodicGenerator:
    """Driven quantum Rabi model under the dressed-basis GME."""
    if p.variant != "qrm_gme":
        raise ValueError("qrm_gme requires variant='qrm_gme'")
    m = dressed_level_count(p)
    bath = OhmicBath(p.kappa, p.omega_c)
    return gme_generator(qrm_hamiltonian(p), qrm_quadrature(p), m, bath,
                         (p.f_drive, p.omega_d))


def observable(kind: str, p) -> np.ndarray:
    """Observable matrix on the model's evolution space.

    ``photon_number`` is ``ad a`` (projected onto the dressed levels for
    the GME variant); ``output_field`` is the frequency-weighted emission
    operator product ``XX_minus @ XX_plus`` in the dressed basis, which is
    undefined for Kerr models.
    """
    if isinstance(p, KerrParams):
        if kind == "photon_number":
            return number(p.cutoff)
        if kind == "output_field":
            raise ValueError("output_field is undefined for Kerr models")
        raise ValueError(f"unknown observable {kind!r}")
    if not isinstance(p, RabiParams):
        raise TypeError(f"unsupported parameter type {type(p)!r}")
    if kind == "photon_number":
        a, _, _, _ = _rabi_ops(p)
        nphot = dagger(a) @ a
        if p.variant == "jcm":
            return nphot
        m = dressed_level_count(p)
        _, vectors = dressed_basis(qrm_hamiltonian(p), m)
        return dagger(vectors) @ nphot @ vectors
    if kind == "output_field":
        if p.variant == "qrm_gme":
            _, _, xx_plus, xx_minus = qrm_drive_ops(p)
            return xx_minus @ xx_plus
        # JCM: emission proxy built from the undriven JC dressed basis,
        # lifted back to the bare evolution space.
        a, sz, sp, _ = _rabi_ops(p)
        h_jc = (p.omega_c * dagger(a) @ a + 0.5 * p.omega_q * sz
                + p.g * (sp @ a + dagger(sp @ a)))
        dim = h_jc.shape[0]
        energies, vectors = dressed_basis(h_jc, dim)
        x = dagger(vectors) @ (1j * (a - dagger(a))) @ vectors
        weights = (energies[None, :] - energies[:, None]) / p.omega_c
        xx_plus = -1j * np.triu(weights * x, k=1)
        return vectors @ (dagger(xx_plus) @ xx_plus) @ dagger(vectors)
    raise ValueError(f"unknown observable {kind!r}")
