"""Compiled kernels and the numpy reference must agree everywhere.

These tests exercise every operator-kind combination the packer can emit
(identity/diagonal/band/dense on both sides, all time profiles) plus the
full adaptive integration, comparing the two backends directly.
"""

import numpy as np
import pytest

from floquet_dpt import _kernels
from floquet_dpt._kernels import pyref
from floquet_dpt._kernels.terms import (
    PROFILE_CONST,
    PROFILE_COS,
    PROFILE_EXP,
    Term,
    pack_terms,
)
from floquet_dpt.generators import TimePeriodicGenerator
from floquet_dpt.lindblad import CollapseOp, liouvillian
from floquet_dpt.linalg import expm, kron
from floquet_dpt.models import KerrParams, RabiParams, jcm_total, kerr_full, qrm_gme

from conftest import random_complex

pytestmark = pytest.mark.skipif(
    not _kernels.HAVE_COMPILED, reason="compiled kernels not built")

from floquet_dpt._kernels import _core  # noqa: E402  (guarded by skipif)


def _dense_of_terms(terms, d, t):
    out = np.zeros((d * d, d * d), dtype=complex)
    from floquet_dpt._kernels.terms import profile_value

    eye = np.eye(d, dtype=complex)
    for term in terms:
        c = term.coeff * profile_value(term.profile, term.omega, t)
        left = eye if term.left is None else term.left
        right = eye if term.right is None else term.right
        out += c * kron(right.T, left)
    return out


def synthetic_terms(rng, d=6):
    """One term of every structural flavor."""
    diag = np.diag(random_complex(rng, d))
    band_up = np.diag(random_complex(rng, d - 1), k=1)
    band_dn = np.diag(random_complex(rng, d - 2), k=-2)
    dense = random_complex(rng, d, d)
    multi = band_up + band_up.T.conj() + diag  # splits into three factors
    return [
        Term(0.7 - 0.2j, PROFILE_CONST, 0.0, None, None),
        Term(1.1, PROFILE_CONST, 0.0, diag, None),
        Term(0.3j, PROFILE_COS, 2.0, None, diag),
        Term(-0.5, PROFILE_CONST, 0.0, band_up, band_dn),
        Term(0.9, PROFILE_EXP, -3.0, diag, band_up),
        Term(0.25j, PROFILE_CONST, 0.0, band_dn, diag),
        Term(-1.2, PROFILE_EXP, 1.0, dense, None),
        Term(0.6, PROFILE_CONST, 0.0, dense, band_up),
        Term(0.8j, PROFILE_COS, 5.0, band_dn, dense),
        Term(-0.4, PROFILE_CONST, 0.0, dense, dense.conj().T),
        Term(1.5, PROFILE_CONST, 0.0, multi, multi),
    ]


class TestActionEquivalence:
    @pytest.mark.parametrize("t", [0.0, 0.37, 2.9])
    def test_synthetic_terms_all_kinds(self, rng, t):
        d = 6
        terms = synthetic_terms(rng, d)
        packed = pack_terms(terms, d)
        y = random_complex(rng, d * d)
        out_c = np.empty_like(y)
        out_p = np.empty_like(y)
        _core.apply_terms(packed, t, y, out_c)
        pyref.apply_terms(packed, t, y, out_p)
        np.testing.assert_allclose(out_c, out_p, atol=1e-13, rtol=1e-13)
        # both must equal the materialized superoperator
        dense = _dense_of_terms(terms, d, t)
        np.testing.assert_allclose(out_c, dense @ y, atol=1e-11)

    def test_model_generators(self, rng):
        gens = [
            kerr_full(KerrParams(omega0=5.0, u_tilde=1.0, f_tilde=0.7, n=2,
                                 omega_d=7.0, eta=0.4, cutoff=7)),
            jcm_total(RabiParams(omega_c=5.0, omega_q=5.0, g=1.0, f_drive=0.5,
                                 omega_d=5.0, cutoff=6, variant="jcm")),
            qrm_gme(RabiParams(omega_c=5.0, omega_q=5.0, g=2.0, f_drive=0.3,
                               omega_d=5.0, cutoff=12, m_levels=8,
                               variant="qrm_gme")),
        ]
        for gen in gens:
            packed = gen.packed
            y = random_complex(rng, packed.n)
            out_c = np.empty_like(y)
            out_p = np.empty_like(y)
            for t in (0.0, 0.21 * gen.period, 0.83 * gen.period):
                _core.apply_terms(packed, t, y, out_c)
                pyref.apply_terms(packed, t, y, out_p)
                np.testing.assert_allclose(out_c, out_p, atol=1e-12, rtol=1e-12)


class TestIntegrationEquivalence:
    def test_static_lindblad_both_match_expm(self, rng):
        from floquet_dpt.operators import destroy

        a = destroy(5)
        h = 2.0 * a.conj().T @ a + 0.4 * (a + a.conj().T)
        lv = liouvillian(h, [CollapseOp(a)])
        gen = lv.as_periodic(1.0)
        v = random_complex(rng, 25)
        want = expm(lv.to_dense() * 0.9) @ v
        got_c, _, _ = _core.integrate_terms(gen.packed, 0.0, 0.9, v, 1e-10, 1e-12, 10**7)
        got_p, _, _ = pyref.integrate_terms(gen.packed, 0.0, 0.9, v, 1e-10, 1e-12, 10**7)
        assert np.linalg.norm(got_c - want) <= 1e-8 * np.linalg.norm(want)
        assert np.linalg.norm(got_p - want) <= 1e-8 * np.linalg.norm(want)
        assert np.linalg.norm(got_c - got_p) <= 1e-8 * np.linalg.norm(want)

    def test_time_dependent_model_agreement(self, rng):
        p = KerrParams(omega0=4.0, u_tilde=1.0, f_tilde=0.5, n=1,
                       omega_d=2 * np.pi, cutoff=5)
        gen = kerr_full(p)
        v = random_complex(rng, 25)
        got_c, _, _ = _core.integrate_terms(gen.packed, 0.0, p.period, v,
                                            1e-10, 1e-12, 10**7)
        got_p, _, _ = pyref.integrate_terms(gen.packed, 0.0, p.period, v,
                                            1e-10, 1e-12, 10**7)
        assert np.linalg.norm(got_c - got_p) <= 1e-8 * np.linalg.norm(got_c)

    def test_compiled_path_deterministic(self, rng):
        p = KerrParams(omega0=4.0, u_tilde=1.0, f_tilde=0.5, n=1,
                       omega_d=2 * np.pi, cutoff=5)
        gen = kerr_full(p)
        v = random_complex(rng, 25)
        runs = [_core.integrate_terms(gen.packed, 0.0, p.period, v,
                                      1e-10, 1e-12, 10**7) for _ in range(2)]
        np.testing.assert_array_equal(runs[0][0], runs[1][0])
        assert runs[0][1:] == runs[1][1:]

    def test_step_budget_error(self, rng):
        p = KerrParams(omega0=4.0, u_tilde=1.0, f_tilde=0.5, n=1,
                       omega_d=2 * np.pi, cutoff=5)
        gen = kerr_full(p)
        v = random_complex(rng, 25)
        from floquet_dpt.errors import IntegrationError

        with pytest.raises(IntegrationError):
            _core.integrate_terms(gen.packed, 0.0, p.period, v, 1e-12, 1e-14, 3)


class TestGeneratorFacade:
    def test_generator_action_uses_selected_backend(self, rng):
        gen = TimePeriodicGenerator(
            1.0, dim=4,
            terms=[Term(1.0, PROFILE_CONST, 0.0, random_complex(rng, 4, 4), None)])
        v = random_complex(rng, 16)
        out_facade = gen.action(0.0, v)
        out_ref = np.empty_like(v)
        pyref.apply_terms(gen.packed, 0.0, v, out_ref)
        np.testing.assert_allclose(out_facade, out_ref, atol=1e-13)
