import numpy as np
import pytest

from floquet_dpt.lindblad import (
    CollapseOp,
    OhmicBath,
    dissipator_action,
    gme_generator,
    liouvillian,
    time_dependent_liouvillian,
)
from floquet_dpt.linalg import dagger, unvec, vec
from floquet_dpt.operators import destroy, pauli

from conftest import random_complex, random_density, random_hermitian


def gme_quadruple_sum_action(energies, x, bath, f_amp, omega_d, t, rho):
    """Literal non-secular double-sum GME action (independent oracle).

    ``x`` holds the coupling matrix elements in the (energy-ordered)
    eigenbasis; the Hamiltonian is diag(energies).
    """
    m = len(energies)
    h = np.diag(energies).astype(complex)
    acc = -1j * (h @ rho - rho @ h)

    def transition(j, k):
        op = np.zeros((m, m), dtype=complex)
        op[j, k] = x[j, k]
        return op

    for j in range(m):
        for k in range(j + 1, m):
            xjk = transition(j, k)
            for l in range(m):
                for mm in range(l + 1, m):
                    xlm = transition(l, mm)
                    rate = bath.rate(energies[mm] - energies[l])
                    acc += 0.5 * rate * (
                        xlm @ rho @ dagger(xjk)
                        - dagger(xjk) @ xlm @ rho
                        + xjk @ rho @ dagger(xlm)
                        - rho @ dagger(xlm) @ xjk
                    )
    # drive harmonics
    x_plus = np.triu(x, k=1)
    drv = f_amp * (x_plus * np.exp(1j * omega_d * t) + dagger(x_plus) * np.exp(-1j * omega_d * t))
    acc += -1j * (drv @ rho - rho @ drv)
    return acc


class TestDissipator:
    def test_single_quantum_decay(self):
        kappa = 0.7
        lop = CollapseOp(np.sqrt(kappa) * destroy(2))
        rho = np.diag([0.0, 1.0]).astype(complex)
        want = kappa * np.diag([1.0, -1.0]).astype(complex)
        np.testing.assert_allclose(dissipator_action(lop, rho), want, atol=1e-14)

    def test_vacuum_is_dark(self):
        lop = CollapseOp(destroy(2))
        rho = np.diag([1.0, 0.0]).astype(complex)
        np.testing.assert_allclose(dissipator_action(lop, rho), 0.0, atol=1e-15)

    def test_traceless(self, rng):
        lop = random_complex(rng, 5, 5)
        rho = random_density(rng, 5)
        assert abs(np.trace(dissipator_action(lop, rho))) <= 1e-12

    def test_shape_mismatch(self, rng):
        with pytest.raises(ValueError):
            dissipator_action(np.eye(3), random_density(rng, 2))


class TestStaticLiouvillian:
    def test_coherence_rotation_eigenvalues(self):
        omega = 1.3
        a = destroy(2)
        lv = liouvillian(omega * dagger(a) @ a, [])
        eigs = np.linalg.eigvals(lv.to_dense())
        want = np.sort_complex(np.array([0.0, 0.0, -1j * omega, 1j * omega]))
        np.testing.assert_allclose(np.sort_complex(eigs), want, atol=1e-12)

    def test_damped_tls_spectrum(self):
        # dense eigendecomposition oracle for the 4x4 superoperator;
        # spectrum is basis-labeling independent (sigma_- gives the same)
        kappa = 1.0
        for decay in (destroy(2), pauli("-")):
            lv = liouvillian(np.zeros((2, 2)), [CollapseOp(np.sqrt(kappa) * decay)])
            eigs = np.sort(np.linalg.eigvals(lv.to_dense()).real)
            np.testing.assert_allclose(eigs, [-1.0, -0.5, -0.5, 0.0], atol=1e-12)

    def test_damped_tls_steady_state_is_dark_state(self):
        # decay operator |0><1|: the dark (ground) state is index 0
        lv = liouvillian(np.zeros((2, 2)), [CollapseOp(destroy(2))])
        w, v = np.linalg.eig(lv.to_dense())
        rho = unvec(v[:, np.argmin(np.abs(w))], 2, 2)
        rho /= np.trace(rho)
        np.testing.assert_allclose(rho, np.diag([1.0, 0.0]), atol=1e-12)

    def test_matrix_free_matches_dense(self, rng):
        h = random_hermitian(rng, 5)
        ls = [CollapseOp(random_complex(rng, 5, 5)), CollapseOp(destroy(5))]
        lv = liouvillian(h, ls)
        dense = lv.to_dense()
        for _ in range(3):
            v = random_complex(rng, 25)
            assert np.max(np.abs(lv.action(v) - dense @ v)) <= 1e-12 * np.max(np.abs(dense @ v))

    def test_full_basis_agreement_small_dims(self, rng):
        for d in (2, 3, 7, 12):
            h = random_hermitian(rng, d)
            lv = liouvillian(h, [CollapseOp(random_complex(rng, d, d))])
            dense = lv.to_dense()
            probe = np.eye(d * d, dtype=complex)
            cols = np.column_stack([lv.action(probe[:, i]) for i in range(d * d)])
            assert np.max(np.abs(cols - dense)) <= 1e-12 * max(1.0, np.max(np.abs(dense)))

    def test_hermiticity_preserved(self, rng):
        h = random_hermitian(rng, 4)
        lv = liouvillian(h, [CollapseOp(random_complex(rng, 4, 4))])
        rho = random_hermitian(rng, 4)
        out = unvec(lv.action(vec(rho)), 4, 4)
        assert np.max(np.abs(out - dagger(out))) <= 1e-11

    def test_non_hermitian_hamiltonian_rejected(self, rng):
        with pytest.raises(ValueError):
            liouvillian(random_complex(rng, 3, 3), [])


class TestTimeDependentLiouvillian:
    def test_constant_callable_is_time_independent(self, rng):
        h = random_hermitian(rng, 3)
        gen = time_dependent_liouvillian(lambda t: h, [CollapseOp(destroy(3))], period=2.0)
        v = random_complex(rng, 9)
        np.testing.assert_allclose(gen.action(0.1, v), gen.action(1.9, v), atol=1e-14)

    def test_periodicity_by_construction(self, rng):
        h0 = random_hermitian(rng, 3)
        h1 = random_hermitian(rng, 3)
        period = 1.7
        omega = 2 * np.pi / period

        def h_of_t(t):
            return h0 + np.cos(omega * t) * h1

        gen = time_dependent_liouvillian(h_of_t, [CollapseOp(destroy(3))], period)
        for t in (0.0, 0.3, 1.2):
            v = random_complex(rng, 9)
            diff = gen.action(t, v) - gen.action(t + period, v)
            assert np.max(np.abs(diff)) <= 1e-12

    def test_matches_static_assembly_at_fixed_time(self, rng):
        h0 = random_hermitian(rng, 4)
        hd = random_hermitian(rng, 4)
        ls = [CollapseOp(destroy(4))]
        period = 3.0
        omega = 2 * np.pi / period
        gen = time_dependent_liouvillian(lambda t: h0 + np.cos(omega * t) * hd, ls, period)
        t = 0.47
        frozen = liouvillian(h0 + np.cos(omega * t) * hd, ls)
        v = random_complex(rng, 16)
        np.testing.assert_allclose(gen.action(t, v), frozen.action(v), atol=1e-12)


class TestOhmicBath:
    def test_rate_values(self):
        bath = OhmicBath(kappa=1.0, omega_ref=50.0)
        assert bath.rate(50.0) == pytest.approx(1.0)
        assert bath.rate(25.0) == pytest.approx(0.5)

    def test_degenerate_transitions_silent(self):
        bath = OhmicBath(kappa=1.0, omega_ref=1.0)
        assert bath.rate(0.0) == 0.0
        assert bath.rate(1e-12) == 0.0

    def test_negative_frequency_rejected(self):
        with pytest.raises(ValueError):
            OhmicBath(1.0, 1.0).rate(-0.5)

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            OhmicBath(0.0, 1.0)


class TestGmeGenerator:
    def _random_dressed_problem(self, rng, m=5):
        energies = np.sort(rng.uniform(0.5, 6.0, size=m))
        coupling = random_hermitian(rng, m)
        return energies, coupling

    def test_matches_quadruple_sum_oracle(self, rng):
        m = 5
        energies, coupling = self._random_dressed_problem(rng, m)
        bath = OhmicBath(kappa=0.8, omega_ref=2.0)
        f_amp, omega_d = 0.3, 4.0
        gen = gme_generator(np.diag(energies), coupling, m, bath, (f_amp, omega_d))
        x = coupling  # identity dressed basis for a diagonal Hamiltonian
        for t in (0.0, 0.21, 1.3):
            rho = random_density(rng, m)
            got = unvec(gen.action(t, vec(rho)), m, m)
            want = gme_quadruple_sum_action(energies, x, bath, f_amp, omega_d, t, rho)
            assert np.max(np.abs(got - want)) <= 1e-12 * max(1.0, np.max(np.abs(want)))

    def test_uncoupled_limit_reduces_to_lindblad(self, rng):
        # photon ladder: all retained transitions sit at the reference
        # frequency, so the GME must equal the standard loss dissipator
        m = 6
        omega_c = 2.0
        kappa = 0.9
        a = destroy(m)
        energies = omega_c * np.arange(m)
        coupling = 1j * (a - dagger(a))
        gen = gme_generator(np.diag(energies).astype(complex), coupling, m,
                            OhmicBath(kappa, omega_c), (0.0, omega_c))
        ref = liouvillian(np.diag(energies).astype(complex),
                          [CollapseOp(np.sqrt(kappa) * a)])
        for _ in range(3):
            rho = random_density(rng, m)
            got = unvec(gen.action(0.0, vec(rho)), m, m)
            want = unvec(ref.action(vec(rho)), m, m)
            assert np.max(np.abs(got - want)) <= 1e-9

    def test_trace_annihilation_all_harmonics(self, rng):
        m = 5
        energies, coupling = self._random_dressed_problem(rng, m)
        gen = gme_generator(np.diag(energies), coupling, m,
                            OhmicBath(1.0, 2.0), (0.4, 3.0))
        comps = gen.fourier_components()
        assert set(comps) == {-1, 0, 1}
        for h, comp in comps.items():
            for _ in range(3):
                rho = random_hermitian(rng, m)
                out = unvec(comp.action(0.0, vec(rho)), m, m)
                assert abs(np.trace(out)) <= 1e-10

    def test_exactly_three_harmonic_form(self, rng):
        m = 4
        energies, coupling = self._random_dressed_problem(rng, m)
        gen = gme_generator(np.diag(energies), coupling, m,
                            OhmicBath(1.0, 2.0), (0.25, 5.0))
        comps = gen.fourier_components()
        for t in (0.0, 0.17, 0.9):
            v = random_complex(rng, m * m)
            recon = (comps[0].action(0.0, v)
                     + np.exp(1j * 5.0 * t) * comps[1].action(0.0, v)
                     + np.exp(-1j * 5.0 * t) * comps[-1].action(0.0, v))
            np.testing.assert_allclose(gen.action(t, v), recon, atol=1e-13)

    def test_zero_drive_is_static(self, rng):
        m = 4
        energies, coupling = self._random_dressed_problem(rng, m)
        gen = gme_generator(np.diag(energies), coupling, m,
                            OhmicBath(1.0, 2.0), (0.0, 5.0))
        assert gen.is_static

    def test_hermiticity_preserved(self, rng):
        m = 5
        energies, coupling = self._random_dressed_problem(rng, m)
        gen = gme_generator(np.diag(energies), coupling, m,
                            OhmicBath(1.0, 2.0), (0.3, 4.0))
        for t in (0.0, 0.4):
            rho = random_hermitian(rng, m)
            out = unvec(gen.action(t, vec(rho)), m, m)
            assert np.max(np.abs(out - dagger(out))) <= 1e-11

    def test_requires_two_levels(self, rng):
        with pytest.raises(ValueError):
            gme_generator(np.eye(3), np.eye(3), 1, OhmicBath(1.0, 1.0), (0.0, 1.0))
