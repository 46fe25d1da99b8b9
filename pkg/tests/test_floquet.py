import numpy as np
import pytest

from floquet_dpt.errors import ConvergenceError, DegenerateSteadyStateError
from floquet_dpt.floquet import (
    ArnoldiConfig,
    FloquetJob,
    SymmetrySpec,
    arnoldi_eigs,
    choi_matrix,
    dense_oracle,
    dense_oracle_refined,
    gap,
    period_average,
    propagate_period,
    sector_decompose,
    steady_state,
)
from floquet_dpt.generators import TimePeriodicGenerator
from floquet_dpt.integrate import IntegratorConfig
from floquet_dpt.lindblad import CollapseOp, liouvillian
from floquet_dpt.linalg import dagger, expm, unvec, vec
from floquet_dpt.models import KerrParams, kerr_full, kerr_rwa, kerr_symmetry
from floquet_dpt.operators import destroy

from conftest import random_complex, random_density, random_hermitian


def assert_multiset_close(a, b, tol):
    a = list(a)
    b = list(b)
    assert len(a) == len(b)
    for x in a:
        diffs = [abs(x - y) for y in b]
        i = int(np.argmin(diffs))
        assert diffs[i] <= tol, f"{x} unmatched (closest {b[i]})"
        b.pop(i)


def damped_tls_job(kappa=1.0, period=1.0, **arnoldi_kwargs):
    lv = liouvillian(np.zeros((2, 2)), [CollapseOp(np.sqrt(kappa) * destroy(2))])
    gen = lv.as_periodic(period)
    return FloquetJob(gen, arnoldi=ArnoldiConfig(**arnoldi_kwargs))


def small_rwa_kerr(cutoff=8):
    # period of order 1/kappa so the propagator spectrum is well separated
    return KerrParams(omega0=10.0, u_tilde=1.0, f_tilde=0.5, n=1,
                      omega_d=2 * np.pi, cutoff=cutoff)


def small_full_kerr(cutoff=4, f_tilde=0.4):
    return KerrParams(omega0=4.0, u_tilde=1.0, f_tilde=f_tilde, n=1,
                      omega_d=2 * np.pi, cutoff=cutoff)


class TestPropagatePeriod:
    def test_null_generator_keeps_state(self, rng):
        gen = TimePeriodicGenerator(1.0, dim=3, terms=())
        job = FloquetJob(gen)
        rho = random_density(rng, 3)
        np.testing.assert_allclose(propagate_period(job, rho), rho, atol=1e-15)

    def test_static_matches_expm_oracle(self, rng):
        h = random_hermitian(rng, 3)
        lv = liouvillian(h, [CollapseOp(destroy(3))])
        gen = lv.as_periodic(0.9)
        # force the adaptive route so this cross-checks the integrator
        job = FloquetJob(gen, integrator=IntegratorConfig(static_fast_path=False))
        rho = random_density(rng, 3)
        got = propagate_period(job, rho)
        want = unvec(expm(lv.to_dense() * 0.9) @ vec(rho), 3, 3)
        assert np.max(np.abs(got - want)) <= 1e-8

    def test_kerr_full_preserves_trace(self, rng):
        p = KerrParams(omega0=50.0, u_tilde=10.0, f_tilde=1.0, n=1,
                       delta=-80.0, cutoff=6)
        job = FloquetJob(kerr_full(p))
        rho = random_density(rng, 6)
        out = propagate_period(job, rho)
        assert abs(np.trace(out) - np.trace(rho)) <= 1e-9

    def test_shape_mismatch(self, rng):
        job = damped_tls_job()
        with pytest.raises(ValueError):
            propagate_period(job, random_density(rng, 3))


class TestArnoldi:
    def test_damped_tls_analytic_spectrum(self):
        # L eigenvalues {0, -k/2, -k/2, -k} exponentiate over T = 1/k
        job = damped_tls_job()
        spec = arnoldi_eigs(job)
        want = np.array([1.0, np.exp(-0.5), np.exp(-0.5), np.exp(-1.0)])
        np.testing.assert_allclose(np.abs(spec.eigenvalues), want, atol=1e-9)
        np.testing.assert_allclose(spec.eigenvalues.imag, 0.0, atol=1e-9)
        assert gap(spec) == pytest.approx(1.0 - np.exp(-0.5), abs=1e-9)

    def test_leading_eigenvalue_is_one(self):
        p = small_rwa_kerr()
        job = FloquetJob(kerr_rwa(p))
        spec = arnoldi_eigs(job)
        assert abs(spec.eigenvalues[0] - 1.0) <= 1e-8

    def test_rwa_kerr_matches_dense_liouvillian_exponentials(self):
        p = small_rwa_kerr()
        gen = kerr_rwa(p)
        job = FloquetJob(gen, arnoldi=ArnoldiConfig(n_eigs=6, tol=1e-10))
        spec = arnoldi_eigs(job)
        lam = np.linalg.eigvals(gen.to_dense(0.0))
        eps_dense = np.exp(lam * p.period)
        # match each Arnoldi eigenvalue to the closest dense one
        for eps in spec.eigenvalues:
            assert np.min(np.abs(eps_dense - eps)) <= 1e-7

    def test_eigenvalue_ordering(self):
        job = damped_tls_job()
        spec = arnoldi_eigs(job)
        mods = np.abs(spec.eigenvalues)
        assert np.all(np.diff(mods) <= 1e-12)

    def test_residuals_are_true_residuals(self):
        p = small_rwa_kerr(cutoff=5)
        gen = kerr_rwa(p)
        job = FloquetJob(gen)
        spec = arnoldi_eigs(job)
        apply_map = job.period_map()
        for eps, eta, res in zip(spec.eigenvalues, spec.eigenmatrices, spec.residuals):
            v = vec(eta)
            true_res = np.linalg.norm(apply_map(v) - eps * v)
            assert true_res <= max(5 * res, 1e-9)

    def test_spectral_radius_bound(self):
        for job in (damped_tls_job(), FloquetJob(kerr_rwa(small_rwa_kerr()))):
            spec = arnoldi_eigs(job)
            assert np.max(np.abs(spec.eigenvalues)) <= 1.0 + 1e-8

    def test_anchor_time_invariance_of_eigenvalues(self):
        p = small_full_kerr()
        gen = kerr_full(p)
        cfg = ArnoldiConfig(n_eigs=4, tol=1e-10)
        multisets = []
        for frac in (0.0, 0.25, 0.5):
            job = FloquetJob(gen, t_anchor=frac * p.period, arnoldi=cfg)
            multisets.append(arnoldi_eigs(job).eigenvalues)
        for other in multisets[1:]:
            assert_multiset_close(multisets[0], other, 1e-7)

    def test_nonconvergence_carries_residuals(self):
        p = small_rwa_kerr(cutoff=5)
        job = FloquetJob(kerr_rwa(p),
                         arnoldi=ArnoldiConfig(subspace_dim=6, n_eigs=4,
                                               tol=1e-14, max_restarts=0))
        with pytest.raises(ConvergenceError) as err:
            arnoldi_eigs(job)
        assert err.value.residuals is not None

    def test_eigenmatrices_unit_frobenius_and_phase(self):
        spec = arnoldi_eigs(damped_tls_job())
        for eta in spec.eigenmatrices:
            assert np.linalg.norm(eta) == pytest.approx(1.0, abs=1e-12)
            flat = eta.ravel()
            lead = flat[np.argmax(np.abs(flat))]
            assert abs(lead.imag) <= 1e-10 and lead.real > 0


class TestSectors:
    def test_partition_example_n2(self):
        spec = SymmetrySpec(2, np.arange(2))
        sectors = sector_decompose(spec, 2)
        # vec index q*D + p for |p><q|: populations at 0, 3; coherences 1, 2
        np.testing.assert_array_equal(sectors[0], [0, 3])
        np.testing.assert_array_equal(sectors[1], [1, 2])

    def test_partition_covers_everything(self):
        spec = SymmetrySpec(3, np.arange(5))
        sectors = sector_decompose(spec, 5)
        assert sum(len(s) for s in sectors) == 25
        assert len(np.unique(np.concatenate(sectors))) == 25

    def test_unitary_has_root_of_unity_superop_eigenvalues(self):
        spec = SymmetrySpec(2, np.arange(4))
        u = spec.unitary()
        assert np.max(np.abs(np.linalg.matrix_power(u, 2) - np.eye(4))) <= 1e-10
        phases = spec.vec_phases()
        sectors = sector_decompose(spec, 4)
        for d, idx in enumerate(sectors):
            np.testing.assert_allclose(phases[idx], spec.sector_eigenvalue(d), atol=1e-12)

    def test_symmetry_commutes_with_two_photon_kerr(self, rng):
        p = KerrParams(omega0=3.0, u_tilde=1.0, f_tilde=1.0, n=2,
                       omega_d=2 * np.pi, eta=0.5, cutoff=6)
        gen = kerr_full(p)
        sym = kerr_symmetry(p)
        phases = sym.vec_phases()
        for t in (0.0, 0.2 * p.period, 0.77 * p.period):
            v = random_complex(rng, 36)
            lhs = phases * gen.action(t, v)
            rhs = gen.action(t, phases * v)
            assert np.max(np.abs(lhs - rhs)) <= 1e-10 * np.linalg.norm(v)

    def test_rwa_two_photon_kerr_commutes(self, rng):
        p = KerrParams(omega0=3.0, u_tilde=1.0, f_tilde=1.0, n=2,
                       omega_d=2 * np.pi, eta=0.5, cutoff=6)
        gen = kerr_rwa(p)
        phases = kerr_symmetry(p).vec_phases()
        v = random_complex(rng, 36)
        lhs = phases * gen.action(0.0, v)
        rhs = gen.action(0.0, phases * v)
        assert np.max(np.abs(lhs - rhs)) <= 1e-10 * np.linalg.norm(v)

    def test_sector_union_matches_dense_spectrum(self):
        p = KerrParams(omega0=3.0, u_tilde=1.0, f_tilde=0.8, n=2,
                       omega_d=2 * np.pi, eta=0.5, cutoff=4)
        gen = kerr_rwa(p)
        sym = kerr_symmetry(p)
        dense_eps = np.linalg.eigvals(dense_oracle(gen, steps=64))
        cfg = ArnoldiConfig(n_eigs=4, tol=1e-10)
        collected = []
        for d in (0, 1):
            job = FloquetJob(gen, arnoldi=cfg)
            spec = arnoldi_eigs(job, sector=(sym, d))
            assert spec.sector_labels is not None and np.all(spec.sector_labels == d)
            collected.extend(spec.eigenvalues)
        for eps in collected:
            assert np.min(np.abs(dense_eps - eps)) <= 1e-7
        # the dominant dense eigenvalues are covered by the sector union
        top = dense_eps[np.argsort(-np.abs(dense_eps))][:4]
        for eps in top:
            assert np.min(np.abs(np.array(collected) - eps)) <= 1e-7

    def test_sector_restriction_rejects_noncommuting_generator(self, rng):
        # single-photon drive breaks the Z2 symmetry
        p = small_full_kerr(cutoff=4)
        gen = kerr_full(p)
        sym = SymmetrySpec(2, np.arange(4))
        job = FloquetJob(gen)
        with pytest.raises(ValueError):
            arnoldi_eigs(job, sector=(sym, 0))


class TestSteadyState:
    def test_damped_tls_ground_state(self):
        spec = arnoldi_eigs(damped_tls_job())
        rho = steady_state(spec)
        np.testing.assert_allclose(rho, np.diag([1.0, 0.0]), atol=1e-10)

    def test_unit_trace_exact(self):
        spec = arnoldi_eigs(FloquetJob(kerr_rwa(small_rwa_kerr())))
        rho = steady_state(spec)
        assert np.trace(rho).real == pytest.approx(1.0, abs=1e-14)
        assert abs(np.trace(rho).imag) <= 1e-14

    def test_matches_dense_null_space(self):
        p = small_rwa_kerr(cutoff=6)
        gen = kerr_rwa(p)
        spec = arnoldi_eigs(FloquetJob(gen))
        rho = steady_state(spec)
        dense = gen.to_dense(0.0)
        w, v = np.linalg.eig(dense)
        rho_oracle = unvec(v[:, np.argmin(np.abs(w))], 6, 6)
        rho_oracle /= np.trace(rho_oracle)
        # trace distance
        dist = 0.5 * np.sum(np.abs(np.linalg.eigvalsh(rho - rho_oracle)))
        assert dist <= 1e-7

    def test_degenerate_leading_pair_rejected(self):
        fake = arnoldi_eigs(damped_tls_job())
        fake.eigenmatrices[0] = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
        with pytest.raises(DegenerateSteadyStateError):
            steady_state(fake)

    def test_wrong_leading_eigenvalue_rejected(self):
        spec = arnoldi_eigs(damped_tls_job())
        spec.eigenvalues = spec.eigenvalues * 0.9
        with pytest.raises(ValueError):
            steady_state(spec)


class TestPeriodAverage:
    def test_static_model_gives_exact_expectation(self):
        p = small_rwa_kerr(cutoff=6)
        job = FloquetJob(kerr_rwa(p))
        rho = steady_state(arnoldi_eigs(job))
        nphot = dagger(destroy(6)) @ destroy(6)
        avg = period_average(job, rho, nphot)
        assert abs(avg - np.trace(rho @ nphot)) <= 1e-8 * max(1.0, abs(avg))

    def test_identity_observable_averages_to_one(self):
        p = small_full_kerr()
        job = FloquetJob(kerr_full(p))
        rho = steady_state(arnoldi_eigs(job))
        avg = period_average(job, rho, np.eye(p.cutoff, dtype=complex))
        assert avg.real == pytest.approx(1.0, abs=1e-8)
        assert abs(avg.imag) <= 1e-10

    def test_refinement_consistency_time_dependent(self):
        p = small_full_kerr()
        job = FloquetJob(kerr_full(p))
        rho = steady_state(arnoldi_eigs(job))
        nphot = dagger(destroy(p.cutoff)) @ destroy(p.cutoff)
        a32 = period_average(job, rho, nphot, nodes=32)
        a64 = period_average(job, rho, nphot, nodes=64)
        assert abs(a32 - a64) <= 1e-6 * max(1.0, abs(a64))


class TestGap:
    def test_damped_tls_value(self):
        spec = arnoldi_eigs(damped_tls_job())
        assert gap(spec) == pytest.approx(1.0 - np.exp(-0.5), abs=1e-9)

    def test_needs_two_pairs(self):
        spec = arnoldi_eigs(damped_tls_job())
        spec.eigenvalues = spec.eigenvalues[:1]
        spec.residuals = spec.residuals[:1]
        with pytest.raises(ValueError):
            gap(spec)

    def test_invariant_under_eigenmatrix_phases(self):
        spec = arnoldi_eigs(damped_tls_job())
        before = gap(spec)
        spec.eigenmatrices = [m * np.exp(0.3j) for m in spec.eigenmatrices]
        assert gap(spec) == before


class TestDenseOracle:
    def test_null_generator_gives_identity(self):
        gen = TimePeriodicGenerator(1.0, dim=2, terms=())
        np.testing.assert_allclose(dense_oracle(gen, steps=4), np.eye(4), atol=1e-14)

    def test_static_matches_expm(self, rng):
        h = random_hermitian(rng, 3)
        lv = liouvillian(h, [CollapseOp(destroy(3))])
        gen = lv.as_periodic(0.7)
        got = dense_oracle(gen, steps=128)
        want = expm(lv.to_dense() * 0.7)
        assert np.max(np.abs(got - want)) <= 1e-9

    def test_cross_validates_matrix_free_propagation(self, rng):
        p = small_full_kerr(cutoff=3)
        gen = kerr_full(p)
        u = dense_oracle_refined(gen, tol=1e-8, steps=256)
        job = FloquetJob(gen)
        for _ in range(3):
            rho = random_density(rng, 3)
            got = propagate_period(job, rho)
            want = unvec(u @ vec(rho), 3, 3)
            assert np.max(np.abs(got - want)) <= 1e-6

    def test_dimension_guard(self):
        gen = TimePeriodicGenerator(1.0, dim=100, terms=())
        with pytest.raises(ValueError):
            dense_oracle(gen)


class TestChoi:
    def test_identity_channel_choi(self):
        c = choi_matrix(np.eye(4, dtype=complex))
        # maximally entangled projector (unnormalized): PSD, rank 1, trace D
        w = np.linalg.eigvalsh(c)
        assert w[-1] == pytest.approx(2.0)
        assert np.all(w[:-1] >= -1e-12)

    def test_complete_positivity_desk_scale(self, rng):
        # Lindblad-form propagators have PSD Choi matrices
        cases = []
        h = random_hermitian(rng, 2)
        cases.append(liouvillian(h, [CollapseOp(destroy(2))]).as_periodic(0.8))
        cases.append(kerr_full(small_full_kerr(cutoff=4)))
        for gen in cases:
            u = dense_oracle(gen, steps=512)
            w = np.linalg.eigvalsh(choi_matrix(u))
            assert w.min() >= -1e-8
