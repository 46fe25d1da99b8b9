"""One-period propagator spectra.

The central objects: :class:`FloquetJob` bundles a generator with the
anchor time, integrator tolerances and Arnoldi settings;
:func:`arnoldi_eigs` extracts the dominant eigenpairs of the one-period map
by a thick-restarted Arnoldi (Krylov-Schur) iteration whose only large-scale
operation is the matrix-free period propagation; :class:`SymmetrySpec`
describes a weak Z_n symmetry whose sectors the iteration can be restricted
to.  A dense brute-force oracle used by the tests materializes the
propagator as an ordered product of short-interval exponentials.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import ConvergenceError, DegenerateSteadyStateError
from .generators import TimePeriodicGenerator
from .integrate import DEFAULT_CONFIG, IntegratorConfig, integrate, static_expm_apply
from .linalg import dagger, expm, unvec, vec

__all__ = [
    "ArnoldiConfig",
    "FloquetJob",
    "FloquetSpectrum",
    "SymmetrySpec",
    "propagate_period",
    "arnoldi_eigs",
    "sector_decompose",
    "steady_state",
    "period_average",
    "gap",
    "dense_oracle",
    "dense_oracle_refined",
    "choi_matrix",
]

_RADIUS_SLACK = 1e-8  # tolerated overshoot of the unit spectral radius


@dataclass(frozen=True)
class ArnoldiConfig:
    """Krylov iteration settings for the one-period map."""

    subspace_dim: int = 30
    n_eigs: int = 6
    tol: float = 1e-8
    max_restarts: int = 50
    seed: int = 1234

    def __post_init__(self):
        if self.n_eigs < 1:
            raise ValueError("n_eigs must be >= 1")
        if self.n_eigs >= self.subspace_dim:
            raise ValueError("need n_eigs < subspace_dim")
        if self.tol <= 0:
            raise ValueError("tol must be positive")


@dataclass(frozen=True)
class SymmetrySpec:
    """Weak Z_n symmetry generated by ``U = exp(-2j*pi*n_phot/n)``.

    ``photon_numbers`` assigns the boson occupation to every Hilbert basis
    state (composite spaces use the boson factor's number), which fixes both
    the unitary and the sector decomposition of the vectorized basis: the
    element |p><q| lies in sector ``d = (n_p - n_q) mod n`` and the
    conjugation superoperator has eigenvalue ``exp(-2j*pi*d/n)`` there.
    Sector 0 contains all populations and hence the steady state.
    """

    order: int
    photon_numbers: np.ndarray

    def __post_init__(self):
        if self.order < 2:
            raise ValueError("symmetry order must be >= 2")
        object.__setattr__(self, "photon_numbers",
                           np.asarray(self.photon_numbers, dtype=np.int64))

    @property
    def dim(self) -> int:
        return self.photon_numbers.size

    def unitary(self) -> np.ndarray:
        phases = np.exp(-2j * np.pi * self.photon_numbers / self.order)
        return np.diag(phases)

    def sector_eigenvalue(self, d: int) -> complex:
        """Root of unity labelling sector d."""
        return np.exp(-2j * np.pi * d / self.order)

    def vec_phases(self) -> np.ndarray:
        """Diagonal of the conjugation superoperator on vectorized states."""
        u = np.exp(-2j * np.pi * self.photon_numbers / self.order)
        # vec index q*D + p carries phase u_p * conj(u_q)
        return (u[None, :] * np.conj(u)[:, None]).reshape(-1, order="F")


def sector_decompose(spec: SymmetrySpec, dim: int) -> list[np.ndarray]:
    """Partition the D^2 vectorized basis indices into symmetry sectors."""
    if spec.dim != dim:
        raise ValueError(f"symmetry defined on dim {spec.dim}, requested {dim}")
    nums = spec.photon_numbers
    idx = np.arange(dim * dim)
    p = idx % dim
    q = idx // dim
    d_of = np.mod(nums[p] - nums[q], spec.order)
    return [np.nonzero(d_of == d)[0] for d in range(spec.order)]


@dataclass(frozen=True)
class FloquetJob:
    """A one-period propagation/diagonalization task."""

    generator: TimePeriodicGenerator
    t_anchor: float = 0.0
    period: float | None = None
    integrator: IntegratorConfig = DEFAULT_CONFIG
    arnoldi: ArnoldiConfig = field(default_factory=ArnoldiConfig)

    def __post_init__(self):
        period = self.generator.period if self.period is None else float(self.period)
        object.__setattr__(self, "period", period)
        if not 0.0 <= self.t_anchor < period:
            raise ValueError(f"need 0 <= t_anchor < period, got {self.t_anchor}")

    @property
    def dim(self) -> int:
        if self.generator.dim is None:
            raise ValueError("generator does not declare its Hilbert dimension")
        return self.generator.dim

    def period_map(self):
        """The map v -> U_F(t_anchor) v on vectorized states."""
        gen = self.generator
        cfg = self.integrator
        if cfg.static_fast_path and gen.terms is not None and gen.is_static:
            period = self.period
            return lambda v: static_expm_apply(gen, v, period)
        t0, t1 = self.t_anchor, self.t_anchor + self.period
        return lambda v: integrate(gen, v, t0, t1, cfg)


@dataclass
class FloquetSpectrum:
    """Dominant eigenpairs of the one-period map.

    Eigenvalues are sorted by |eps| descending, ties by Re(eps) descending
    then |Im(eps)| ascending.  Eigenmatrices have unit Frobenius norm and
    the phase convention that their largest-magnitude entry is real
    positive.  ``residuals`` are the Arnoldi residual norms ``|U v - eps v|``
    for the unit-norm eigenvectors.
    """

    eigenvalues: np.ndarray
    eigenmatrices: list
    residuals: np.ndarray
    t_anchor: float
    period: float
    tol: float
    sector_labels: np.ndarray | None = None
    lindblad_form: bool = True

    def __post_init__(self):
        radius = float(np.max(np.abs(self.eigenvalues))) if self.eigenvalues.size else 0.0
        if radius > 1.0 + _RADIUS_SLACK:
            msg = f"spectral radius {radius:.12f} exceeds 1 + {_RADIUS_SLACK:g}"
            if self.lindblad_form:
                warnings.warn(msg + " for a Lindblad-form propagator")
            else:
                warnings.warn(msg + " (generator is not guaranteed completely positive)")

    @property
    def n_converged(self) -> int:
        return int(np.sum(self.residuals <= self.tol))


def _sort_key(eigenvalues: np.ndarray) -> np.ndarray:
    """Indices realizing the module-wide eigenvalue ordering."""
    return np.lexsort((np.abs(eigenvalues.imag), -eigenvalues.real, -np.abs(eigenvalues)))


def _fix_matrix_phase(mat: np.ndarray) -> np.ndarray:
    flat = mat.ravel()
    i = int(np.argmax(np.abs(flat)))
    a = flat[i]
    return mat if a == 0 else mat * (np.conj(a) / abs(a))


def propagate_period(job: FloquetJob, rho0: np.ndarray) -> np.ndarray:
    """Evolve a density matrix across one period from the anchor time."""
    rho0 = np.asarray(rho0, dtype=np.complex128)
    d = job.dim
    if rho0.shape != (d, d):
        raise ValueError(f"state shape {rho0.shape} does not match dimension {d}")
    return unvec(job.period_map()(vec(rho0)), d, d)


def _check_symmetry_commutes(job: FloquetJob, spec: SymmetrySpec, rng: np.random.Generator):
    """Stochastic check that the generator commutes with the symmetry.

    Cheap action-level test at a few sampled times; a commuting generator
    implies a commuting propagator.
    """
    gen = job.generator
    phases = spec.vec_phases()
    n = phases.size
    for frac in (0.0, 1.0 / 3.0, 0.7):
        t = job.t_anchor + frac * job.period
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        v /= np.linalg.norm(v)
        lhs = phases * gen.action(t, v)
        rhs = gen.action(t, phases * v)
        scale = max(np.linalg.norm(lhs), np.linalg.norm(rhs), 1.0)
        if np.linalg.norm(lhs - rhs) > 1e-8 * scale:
            raise ValueError("generator does not commute with the requested symmetry")


def _start_vector(n: int, d: int, sector, rng: np.random.Generator) -> np.ndarray:
    if sector is None or sector[1] == 0:
        v = vec(np.eye(d, dtype=np.complex128) / d)
        if sector is not None:
            mask = np.zeros(n, dtype=bool)
            mask[sector_decompose(sector[0], d)[0]] = True
            v = np.where(mask, v, 0.0)
    else:
        spec, d_sec = sector
        idx = sector_decompose(spec, d)[d_sec]
        v = np.zeros(n, dtype=np.complex128)
        v[idx] = rng.standard_normal(idx.size) + 1j * rng.standard_normal(idx.size)
    nrm = np.linalg.norm(v)
    if nrm == 0:
        raise ValueError("empty starting vector (sector has no support?)")
    return v / nrm


def arnoldi_eigs(job: FloquetJob, sector: tuple[SymmetrySpec, int] | None = None
                 ) -> FloquetSpectrum:
    """Dominant one-period-map eigenpairs by thick-restarted Arnoldi.

    The Krylov basis is grown by repeated period propagation (restricted to
    the requested symmetry sector when given), orthonormalized by modified
    Gram-Schmidt with one reorthogonalization pass.  Restarts keep the
    leading Schur block (thick restart), so the expensive map applications
    are recycled.  Raises :class:`ConvergenceError` carrying the best
    residuals if the requested pairs have not converged within the restart
    budget.
    """
    cfg = job.arnoldi
    d = job.dim
    n = d * d
    k = min(cfg.n_eigs, n)
    m = min(cfg.subspace_dim, n)
    rng = np.random.default_rng([cfg.seed, 0 if sector is None else sector[1] + 1])

    base_map = job.period_map()
    if sector is not None:
        spec, d_sec = sector
        if not 0 <= d_sec < spec.order:
            raise ValueError(f"sector index {d_sec} out of range for order {spec.order}")
        _check_symmetry_commutes(job, spec, rng)
        mask = np.zeros(n, dtype=bool)
        mask[sector_decompose(spec, d)[d_sec]] = True

        def apply_map(v):
            w = base_map(v)
            w[~mask] = 0.0
            return w
    else:
        apply_map = base_map

    if sector is None:
        support = None
    else:
        support = np.nonzero(mask)[0]

    def replenish(j: int) -> bool:
        """New unit vector orthogonal to columns 0..j (sector-supported)."""
        for _attempt in range(5):
            u = np.zeros(n, dtype=np.complex128)
            idx = support if support is not None else slice(None)
            size = n if support is None else support.size
            u[idx] = rng.standard_normal(size) + 1j * rng.standard_normal(size)
            for _pass in range(2):
                for i in range(j + 1):
                    u -= np.vdot(v_basis[:, i], u) * v_basis[:, i]
            nrm = np.linalg.norm(u)
            if nrm > 1e-8:
                v_basis[:, j + 1] = u / nrm
                return True
        return False

    v_basis = np.zeros((n, m + 1), dtype=np.complex128, order="F")
    g_mat = np.zeros((m + 1, m), dtype=np.complex128)  # projected map + residual row
    v_basis[:, 0] = _start_vector(n, d, sector, rng)
    locked = 0
    n_applies = 0
    best_residuals = None
    subspace_size = n if support is None else support.size

    for _restart in range(cfg.max_restarts + 1):
        # -- Arnoldi expansion from column `locked` up to m
        m_eff = m
        for j in range(locked, m):
            w = apply_map(v_basis[:, j])
            n_applies += 1
            # modified Gram-Schmidt + one reorthogonalization pass
            for _pass in range(2):
                for i in range(j + 1):
                    c = np.vdot(v_basis[:, i], w)
                    w -= c * v_basis[:, i]
                    g_mat[i, j] += c
            beta = np.linalg.norm(w)
            if beta < 1e-13:
                # invariant subspace captured; restart the recurrence in the
                # orthogonal complement so the requested pairs can still fill
                g_mat[j + 1, j] = 0.0
                if j + 1 >= subspace_size or not replenish(j):
                    m_eff = j + 1
                    break
            else:
                g_mat[j + 1, j] = beta
                v_basis[:, j + 1] = w / beta
        beta = float(abs(g_mat[m_eff, m_eff - 1]))

        # -- Ritz pairs of the projected matrix
        g_small = g_mat[:m_eff, :m_eff]
        evals, evecs = scipy.linalg.eig(g_small)
        order = _sort_key(evals)
        evals = evals[order]
        evecs = evecs[:, order]
        evecs /= np.linalg.norm(evecs, axis=0, keepdims=True)
        residuals = beta * np.abs(evecs[m_eff - 1, :])
        k_eff = min(k, m_eff)
        best_residuals = residuals[:k_eff]

        exhausted = m_eff < m
        if np.all(best_residuals <= cfg.tol) or exhausted:
            if not np.all(best_residuals <= cfg.tol):
                raise ConvergenceError(
                    "reachable subspace exhausted before the requested pairs converged",
                    residuals=best_residuals,
                )
            ritz = v_basis[:, :m_eff] @ evecs[:, :k_eff]
            ritz /= np.linalg.norm(ritz, axis=0, keepdims=True)
            mats = [_fix_matrix_phase(unvec(ritz[:, i], d, d)) for i in range(k_eff)]
            labels = None
            if sector is not None:
                labels = np.full(k_eff, sector[1], dtype=np.int64)
            return FloquetSpectrum(
                eigenvalues=evals[:k_eff],
                eigenmatrices=mats,
                residuals=best_residuals,
                t_anchor=job.t_anchor,
                period=job.period,
                tol=cfg.tol,
                sector_labels=labels,
                lindblad_form=job.generator.lindblad_form,
            )

        # -- thick restart: keep the leading Schur block
        keep = min(m_eff - 2, max(k + 4, 2 * k))
        if keep < 1:
            keep = 1
        thresh = np.abs(evals[keep - 1])

        t_mat, q_mat, sdim = scipy.linalg.schur(
            g_small, output="complex", sort=lambda z: bool(abs(z) >= thresh - 1e-14))
        keep_eff = min(int(sdim), m_eff - 1)
        if keep_eff < 1:
            keep_eff = 1
        residual_row = beta * q_mat[m_eff - 1, :keep_eff]
        v_keep = v_basis[:, :m_eff] @ q_mat[:, :keep_eff]
        v_basis[:, :keep_eff] = v_keep
        v_basis[:, keep_eff] = v_basis[:, m_eff]  # the Arnoldi residual direction
        g_mat[:] = 0.0
        g_mat[:keep_eff, :keep_eff] = t_mat[:keep_eff, :keep_eff]
        g_mat[keep_eff, :keep_eff] = residual_row
        locked = keep_eff

    raise ConvergenceError(
        f"Arnoldi did not converge within {cfg.max_restarts} restarts "
        f"({n_applies} period applications; best residuals {best_residuals})",
        residuals=best_residuals,
    )


def steady_state(spectrum: FloquetSpectrum, value_tol: float = 1e-6) -> np.ndarray:
    """Unit-trace Hermitized stroboscopic steady state from the leading pair."""
    if spectrum.eigenvalues.size == 0:
        raise ValueError("empty spectrum")
    eps0 = spectrum.eigenvalues[0]
    if abs(eps0 - 1.0) > value_tol:
        raise ValueError(f"leading eigenvalue {eps0} is not 1 within {value_tol}")
    eta = spectrum.eigenmatrices[0]
    tr = complex(np.trace(eta))
    if abs(tr) < 1e-6:
        raise DegenerateSteadyStateError(
            f"leading eigenmatrix has near-zero trace ({abs(tr):.2e}); "
            "use sector-resolved spectra at degenerate/symmetry-broken points")
    rho = eta / tr
    rho = 0.5 * (rho + dagger(rho))
    min_eig = float(np.min(np.linalg.eigvalsh(rho)))
    if min_eig < -1e-3:
        raise ValueError(f"steady state strongly non-positive (min eigenvalue {min_eig:.3e})")
    if min_eig < -1e-7:
        warnings.warn(f"steady state slightly non-positive (min eigenvalue {min_eig:.3e})")
    return rho


def period_average(job: FloquetJob, rho_ss: np.ndarray, observable: np.ndarray,
                   nodes: int = 32) -> complex:
    """Period-averaged steady-state expectation value of an observable.

    Samples ``Tr[rho(t) O]`` at uniform nodes over one period starting from
    the stroboscopic steady state and averages (uniform sampling is
    spectrally accurate for periodic integrands).  The node count is
    doubled, up to 256, until the average is stable to 1e-6 relative.
    """
    d = job.dim
    obs = np.asarray(observable, dtype=np.complex128)
    if obs.shape != (d, d):
        raise ValueError(f"observable shape {obs.shape} does not match dimension {d}")
    gen = job.generator
    cfg = job.integrator
    static_gen = cfg.static_fast_path and gen.terms is not None and gen.is_static

    def samples_at(n_nodes: int) -> np.ndarray:
        dt = job.period / n_nodes
        v = vec(rho_ss)
        vals = np.empty(n_nodes, dtype=np.complex128)
        for i in range(n_nodes):
            vals[i] = np.trace(obs @ unvec(v, d, d))
            if static_gen:
                v = static_expm_apply(gen, v, dt)
            else:
                t = job.t_anchor + i * dt
                v = integrate(gen, v, t, t + dt, cfg)
        return vals

    k = max(4, nodes)
    while True:
        vals = samples_at(2 * k)
        a_half = complex(np.mean(vals[::2]))
        a_full = complex(np.mean(vals))
        if abs(a_full - a_half) <= 1e-6 * abs(a_full) + 1e-12:
            return a_full
        if 2 * k >= 256:
            raise ConvergenceError(
                f"period average not stable at 256 nodes "
                f"(last refinement changed by {abs(a_full - a_half):.3e})",
                residuals=abs(a_full - a_half),
            )
        k *= 2


def gap(spectrum: FloquetSpectrum) -> float:
    """|eps_1 - eps_0| in the module's fixed eigenvalue ordering."""
    if spectrum.eigenvalues.size < 2:
        raise ValueError("gap needs at least two converged eigenpairs")
    if spectrum.n_converged < 2:
        raise ValueError("gap needs at least two converged eigenpairs")
    return float(abs(spectrum.eigenvalues[1] - spectrum.eigenvalues[0]))


def dense_oracle(gen: TimePeriodicGenerator, steps: int = 1024,
                 t_anchor: float = 0.0) -> np.ndarray:
    """Brute-force one-period propagator for cross-validation.

    Ordered product of ``expm(L(t_mid) * dt)`` over midpoint-sampled
    sub-intervals.  Exact (to expm accuracy) for static generators;
    second-order in dt otherwise, so use :func:`dense_oracle_refined` when a
    tolerance must be guaranteed.
    """
    if gen.dim is None:
        raise ValueError("generator does not declare its Hilbert dimension")
    n = gen.dim * gen.dim
    if n > 4096:
        raise ValueError(f"dense oracle limited to D^2 <= 4096, got {n}")
    if gen.terms is None:
        basis = np.eye(n, dtype=np.complex128)

        def materialize(t):
            return np.column_stack([gen.action(t, basis[:, i]) for i in range(n)])
    else:
        materialize = gen.to_dense

    dt = gen.period / steps
    u_mat = np.eye(n, dtype=np.complex128)
    if gen.terms is not None and gen.is_static:
        return np.linalg.matrix_power(expm(materialize(t_anchor) * dt), steps)
    for i in range(steps):
        t_mid = t_anchor + (i + 0.5) * dt
        u_mat = expm(materialize(t_mid) * dt) @ u_mat
    return u_mat


def dense_oracle_refined(gen: TimePeriodicGenerator, tol: float = 1e-7,
                         steps: int = 1024, max_steps: int = 65536,
                         t_anchor: float = 0.0) -> np.ndarray:
    """Step-double the dense oracle until normalized entries move < tol."""
    u_prev = dense_oracle(gen, steps, t_anchor)
    while steps < max_steps:
        steps *= 2
        u_next = dense_oracle(gen, steps, t_anchor)
        delta = np.max(np.abs(u_next - u_prev)) / np.max(np.abs(u_next))
        u_prev = u_next
        if delta < tol:
            return u_next
    raise ConvergenceError(f"dense oracle not converged at {max_steps} steps")


def choi_matrix(u_super: np.ndarray) -> np.ndarray:
    """Choi matrix of a column-stacking superoperator.

    Positive semidefinite iff the map is completely positive.
    """
    n = u_super.shape[0]
    d = int(round(np.sqrt(n)))
    s4 = u_super.reshape(d, d, d, d)  # s[l, k, j, i] = S[l*d+k, j*d+i]
    return s4.transpose(3, 1, 2, 0).reshape(n, n)
