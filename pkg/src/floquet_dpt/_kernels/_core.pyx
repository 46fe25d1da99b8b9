# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernel backend.

Same algorithms as ``pyref`` (generator action over classified terms plus
the adaptive Dormand-Prince 5(4) stepper), specialized for column-stacked
complex states.  Diagonal and single-band factors of all terms are applied
in one fused column sweep (the output column stays cache-hot across
terms); dense factors go through BLAS zgemm on column-major blocks.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin, sqrt, fabs
from scipy.linalg.cython_blas cimport zgemm

from ..errors import IntegrationError

cnp.import_array()

ctypedef double complex zdouble

cdef int OP_NONE = 0
cdef int OP_DIAG = 1
cdef int OP_BAND = 2
cdef int OP_DENSE = 3

cdef int PROFILE_CONST = 0
cdef int PROFILE_COS = 1
cdef int PROFILE_EXP = 2


cdef inline zdouble _profile(int profile, double omega, double t) nogil:
    if profile == PROFILE_CONST:
        return 1.0
    if profile == PROFILE_COS:
        return cos(omega * t)
    return cos(omega * t) + 1j * sin(omega * t)


cdef inline void _band_rows(int d, int off, int *lo, int *hi) nogil:
    if off >= 0:
        lo[0] = 0
        hi[0] = d - off
    else:
        lo[0] = -off
        hi[0] = d


cdef void _stage_left(int lk, int lo_off, zdouble *lvec, zdouble *ldense,
                      zdouble *y, zdouble *stage, int d) nogil:
    """stage = L y for the zgemm path (L may be identity)."""
    cdef int r, j, rlo, rhi
    cdef int n = d * d
    cdef zdouble one = 1.0
    cdef zdouble zero = 0.0
    cdef char trans = b'N'
    if lk == OP_DENSE:
        zgemm(&trans, &trans, &d, &d, &d, &one, ldense, &d, y, &d, &zero, stage, &d)
        return
    if lk == OP_NONE:
        for r in range(n):
            stage[r] = y[r]
        return
    for r in range(n):
        stage[r] = 0.0
    if lk == OP_DIAG:
        for j in range(d):
            for r in range(d):
                stage[j * d + r] = lvec[r] * y[j * d + r]
    else:
        _band_rows(d, lo_off, &rlo, &rhi)
        for j in range(d):
            for r in range(rlo, rhi):
                stage[j * d + r] = lvec[r] * y[j * d + r + lo_off]


cdef void _dense_term(int lk, int rk, int lo_off, int ro_off, zdouble coeff,
                      zdouble *lvec, zdouble *rvec,
                      zdouble *ldense, zdouble *rdense,
                      zdouble *y, zdouble *out, zdouble *scratch, int d) nogil:
    """out += coeff * (L y R) where at least one side is dense."""
    cdef int r, j, q, jlo, jhi
    cdef zdouble cc
    cdef zdouble one = 1.0
    cdef char trans = b'N'
    if rk == OP_DENSE:
        _stage_left(lk, lo_off, lvec, ldense, y, scratch, d)
        zgemm(&trans, &trans, &d, &d, &d, &coeff, scratch, &d, rdense, &d, &one, out, &d)
        return
    # L dense, R elementwise
    _stage_left(OP_DENSE, 0, NULL, ldense, y, scratch, d)
    if rk == OP_BAND:
        _band_rows(d, ro_off, &jlo, &jhi)
        jlo += ro_off
        jhi += ro_off
    else:
        jlo = 0
        jhi = d
    for j in range(jlo, jhi):
        cc = coeff
        q = j
        if rk == OP_BAND:
            q = j - ro_off
            cc = coeff * rvec[q]
        elif rk == OP_DIAG:
            cc = coeff * rvec[j]
        for r in range(d):
            out[j * d + r] += cc * scratch[q * d + r]


cdef class _Kernel:
    """Packed term arrays pinned into C-level storage.

    Terms are pre-split into a dense group (zgemm) and an elementwise
    group whose per-term coefficient, band windows and payload pointers
    feed the fused column sweep in :meth:`rhs`.
    """

    cdef int n_terms, dim, n, n_elem, n_dense
    cdef cnp.int32_t[::1] profile, lkind, rkind, loff, roff, lidx, ridx
    cdef double[::1] omega
    cdef zdouble[::1] coeff
    cdef zdouble[:, ::1] vecs
    cdef zdouble[:, :, ::1] denses
    cdef zdouble[::1] scratch
    # elementwise term table
    cdef cnp.int32_t[::1] e_term, e_lk, e_rk, e_lo, e_ro
    cdef cnp.int32_t[::1] e_lvec, e_rvec, e_rlo, e_rhi, e_qlo, e_qhi
    cdef cnp.int32_t[::1] d_term
    cdef zdouble[::1] cbuf

    def __init__(self, packed):
        self.n_terms = packed.n_terms
        self.dim = packed.dim
        self.n = packed.n
        self.profile = packed.profile
        self.lkind = packed.lkind
        self.rkind = packed.rkind
        self.loff = packed.loff
        self.roff = packed.roff
        self.lidx = packed.lidx
        self.ridx = packed.ridx
        self.omega = packed.omega
        self.coeff = packed.coeff
        self.vecs = packed.vecs
        self.denses = packed.denses
        self.scratch = np.empty(self.n, dtype=np.complex128)

        d = self.dim
        elem_rows = []
        dense_rows = []
        for i in range(self.n_terms):
            lk = int(packed.lkind[i])
            rk = int(packed.rkind[i])
            if lk == OP_DENSE or rk == OP_DENSE:
                dense_rows.append(i)
                continue
            lo = int(packed.loff[i])
            ro = int(packed.roff[i])
            if lk == OP_BAND:
                rlo, rhi = (0, d - lo) if lo >= 0 else (-lo, d)
            else:
                rlo, rhi = 0, d
            if rk == OP_BAND:
                qlo, qhi = (0, d - ro) if ro >= 0 else (-ro, d)
            else:
                qlo, qhi = 0, d
            elem_rows.append((i, lk, rk, lo, ro,
                              int(packed.lidx[i]), int(packed.ridx[i]),
                              rlo, rhi, qlo, qhi))
        self.n_elem = len(elem_rows)
        self.n_dense = len(dense_rows)
        table = np.array(elem_rows, dtype=np.int32).reshape(self.n_elem, 11)
        self.e_term = np.ascontiguousarray(table[:, 0])
        self.e_lk = np.ascontiguousarray(table[:, 1])
        self.e_rk = np.ascontiguousarray(table[:, 2])
        self.e_lo = np.ascontiguousarray(table[:, 3])
        self.e_ro = np.ascontiguousarray(table[:, 4])
        self.e_lvec = np.ascontiguousarray(table[:, 5])
        self.e_rvec = np.ascontiguousarray(table[:, 6])
        self.e_rlo = np.ascontiguousarray(table[:, 7])
        self.e_rhi = np.ascontiguousarray(table[:, 8])
        self.e_qlo = np.ascontiguousarray(table[:, 9])
        self.e_qhi = np.ascontiguousarray(table[:, 10])
        self.d_term = np.asarray(dense_rows, dtype=np.int32)
        self.cbuf = np.empty(max(self.n_elem, 1), dtype=np.complex128)

    cdef void rhs(self, double t, zdouble *y, zdouble *out) nogil:
        cdef int e, i, r, j, q, d, lk, rk, rlo, rhi, base
        cdef zdouble c, cc
        cdef zdouble *lvec
        cdef zdouble *rvec
        cdef zdouble *ldense
        cdef zdouble *rdense
        cdef zdouble *ycol
        cdef zdouble *ocol
        d = self.dim
        for r in range(self.n):
            out[r] = 0.0
        # dense terms first (fixed order)
        for e in range(self.n_dense):
            i = self.d_term[e]
            c = self.coeff[i] * _profile(self.profile[i], self.omega[i], t)
            if c == 0.0:
                continue
            lvec = rvec = ldense = rdense = NULL
            if self.lkind[i] == OP_DIAG or self.lkind[i] == OP_BAND:
                lvec = &self.vecs[self.lidx[i], 0]
            elif self.lkind[i] == OP_DENSE:
                ldense = &self.denses[self.lidx[i], 0, 0]
            if self.rkind[i] == OP_DIAG or self.rkind[i] == OP_BAND:
                rvec = &self.vecs[self.ridx[i], 0]
            elif self.rkind[i] == OP_DENSE:
                rdense = &self.denses[self.ridx[i], 0, 0]
            _dense_term(self.lkind[i], self.rkind[i], self.loff[i], self.roff[i],
                        c, lvec, rvec, ldense, rdense, y, out, &self.scratch[0], d)
        if self.n_elem == 0:
            return
        # per-call coefficients of the elementwise terms
        for e in range(self.n_elem):
            i = self.e_term[e]
            self.cbuf[e] = self.coeff[i] * _profile(self.profile[i], self.omega[i], t)
        # fused column sweep: the output column stays hot across all terms
        for j in range(d):
            ocol = out + j * d
            for e in range(self.n_elem):
                c = self.cbuf[e]
                if c == 0.0:
                    continue
                rk = self.e_rk[e]
                if rk == OP_BAND:
                    q = j - self.e_ro[e]
                    if q < self.e_qlo[e] or q >= self.e_qhi[e]:
                        continue
                    cc = c * self.vecs[self.e_rvec[e], q]
                elif rk == OP_DIAG:
                    q = j
                    cc = c * self.vecs[self.e_rvec[e], j]
                else:
                    q = j
                    cc = c
                lk = self.e_lk[e]
                rlo = self.e_rlo[e]
                rhi = self.e_rhi[e]
                ycol = y + q * d
                if lk == OP_NONE:
                    for r in range(rlo, rhi):
                        ocol[r] += cc * ycol[r]
                elif lk == OP_DIAG:
                    lvec = &self.vecs[self.e_lvec[e], 0]
                    for r in range(rlo, rhi):
                        ocol[r] += cc * lvec[r] * ycol[r]
                else:
                    lvec = &self.vecs[self.e_lvec[e], 0]
                    base = self.e_lo[e]
                    for r in range(rlo, rhi):
                        ocol[r] += cc * lvec[r] * ycol[r + base]


def _kernel_for(packed):
    kern = getattr(packed, "_compiled_kernel", None)
    if kern is None:
        kern = _Kernel(packed)
        packed._compiled_kernel = kern
    return kern


def apply_terms(packed, double t, cnp.ndarray[zdouble, ndim=1] y,
                cnp.ndarray[zdouble, ndim=1] out):
    """out <- L(t) y over the packed terms (compiled path)."""
    cdef _Kernel kern = _kernel_for(packed)
    if y.shape[0] != kern.n or out.shape[0] != kern.n:
        raise ValueError("state length does not match packed dimension")
    cdef zdouble[::1] yv = np.ascontiguousarray(y)
    cdef zdouble[::1] ov = out
    kern.rhs(t, &yv[0], &ov[0])


# Dormand-Prince 5(4) coefficients (same tableau as the reference backend)
cdef double C2 = 1.0 / 5.0
cdef double C3 = 3.0 / 10.0
cdef double C4 = 4.0 / 5.0
cdef double C5 = 8.0 / 9.0

cdef double A21 = 1.0 / 5.0
cdef double A31 = 3.0 / 40.0, A32 = 9.0 / 40.0
cdef double A41 = 44.0 / 45.0, A42 = -56.0 / 15.0, A43 = 32.0 / 9.0
cdef double A51 = 19372.0 / 6561.0, A52 = -25360.0 / 2187.0
cdef double A53 = 64448.0 / 6561.0, A54 = -212.0 / 729.0
cdef double A61 = 9017.0 / 3168.0, A62 = -355.0 / 33.0, A63 = 46732.0 / 5247.0
cdef double A64 = 49.0 / 176.0, A65 = -5103.0 / 18656.0
cdef double B1 = 35.0 / 384.0, B3 = 500.0 / 1113.0, B4 = 125.0 / 192.0
cdef double B5 = -2187.0 / 6784.0, B6 = 11.0 / 84.0
cdef double E1 = 71.0 / 57600.0, E3 = -71.0 / 16695.0, E4 = 71.0 / 1920.0
cdef double E5 = -17253.0 / 339200.0, E6 = 22.0 / 525.0, E7 = -1.0 / 40.0

cdef double MIN_FACTOR = 0.2
cdef double MAX_FACTOR = 5.0
cdef double SAFETY = 0.9


cdef inline double _cabs(zdouble z) nogil:
    return sqrt(z.real * z.real + z.imag * z.imag)


cdef double _scaled_rms(zdouble *e, zdouble *y0, zdouble *y1,
                        double rtol, double atol, int n) nogil:
    cdef int i
    cdef double acc = 0.0, sc, a0, a1
    for i in range(n):
        a0 = _cabs(y0[i])
        a1 = _cabs(y1[i])
        sc = atol + rtol * (a0 if a0 > a1 else a1)
        a0 = _cabs(e[i]) / sc
        acc += a0 * a0
    return sqrt(acc / n)


cdef double _rms_over_scale(zdouble *v, zdouble *y, double rtol, double atol,
                            int n) nogil:
    cdef int i
    cdef double acc = 0.0, x
    for i in range(n):
        x = _cabs(v[i]) / (atol + rtol * _cabs(y[i]))
        acc += x * x
    return sqrt(acc / n)


def integrate_terms(packed, double t0, double t1,
                    cnp.ndarray[zdouble, ndim=1] y0,
                    double rtol, double atol, long max_steps):
    """Adaptive DP5(4) integration of dy/dt = L(t) y (compiled path)."""
    if t1 < t0:
        raise ValueError("integrate requires t1 >= t0")
    cdef _Kernel kern = _kernel_for(packed)
    cdef int n = kern.n
    if y0.shape[0] != n:
        raise ValueError("state length does not match packed dimension")

    y_arr = np.array(y0, dtype=np.complex128, copy=True, order="C")
    if t1 == t0:
        return y_arr, 0, 0

    cdef zdouble[::1] y = y_arr
    cdef zdouble[::1] ynew = np.empty(n, dtype=np.complex128)
    cdef zdouble[::1] ytmp = np.empty(n, dtype=np.complex128)
    cdef zdouble[::1] err = np.empty(n, dtype=np.complex128)
    cdef zdouble[::1] k0 = np.empty(n, dtype=np.complex128)
    cdef zdouble[::1] k1 = np.empty(n, dtype=np.complex128)
    cdef zdouble[::1] k2 = np.empty(n, dtype=np.complex128)
    cdef zdouble[::1] k3 = np.empty(n, dtype=np.complex128)
    cdef zdouble[::1] k4 = np.empty(n, dtype=np.complex128)
    cdef zdouble[::1] k5 = np.empty(n, dtype=np.complex128)
    cdef zdouble[::1] k6 = np.empty(n, dtype=np.complex128)
    cdef zdouble[::1] swap_tmp
    cdef zdouble[::1] out_view

    cdef double span = t1 - t0
    cdef double t = t0
    cdef double h, h_step, err_norm, factor, d0, d1, d2, h0_try, h1_try
    cdef double max_factor = MAX_FACTOR
    cdef double tiny = 1e-14 * max(fabs(t0), fabs(t1), 1.0)
    cdef long n_steps = 0
    cdef long nfev
    cdef bint last
    cdef int i

    kern.rhs(t0, &y[0], &k0[0])
    nfev = 1

    # starting step: two trial derivative evaluations (Hairer's recipe)
    d0 = _rms_over_scale(&y[0], &y[0], rtol, atol, n)
    d1 = _rms_over_scale(&k0[0], &y[0], rtol, atol, n)
    if d0 < 1e-5 or d1 < 1e-5:
        h0_try = 1e-6
    else:
        h0_try = 0.01 * d0 / d1
    if h0_try > span:
        h0_try = span
    for i in range(n):
        ytmp[i] = y[i] + h0_try * k0[i]
    kern.rhs(t0 + h0_try, &ytmp[0], &k1[0])
    nfev += 1
    for i in range(n):
        ynew[i] = k1[i] - k0[i]
    d2 = _rms_over_scale(&ynew[0], &y[0], rtol, atol, n) / h0_try
    if max(d1, d2) <= 1e-15:
        h1_try = max(1e-6, h0_try * 1e-3)
    else:
        h1_try = (0.01 / max(d1, d2)) ** 0.2
    h = min(100.0 * h0_try, h1_try, span)

    while True:
        if n_steps >= max_steps:
            raise IntegrationError("step budget exhausted", t)
        last = (t1 - t) <= h
        h_step = (t1 - t) if last else h
        if h_step <= tiny:
            raise IntegrationError("step size underflow", t)

        for i in range(n):
            ytmp[i] = y[i] + h_step * (A21 * k0[i])
        kern.rhs(t + C2 * h_step, &ytmp[0], &k1[0])
        for i in range(n):
            ytmp[i] = y[i] + h_step * (A31 * k0[i] + A32 * k1[i])
        kern.rhs(t + C3 * h_step, &ytmp[0], &k2[0])
        for i in range(n):
            ytmp[i] = y[i] + h_step * (A41 * k0[i] + A42 * k1[i] + A43 * k2[i])
        kern.rhs(t + C4 * h_step, &ytmp[0], &k3[0])
        for i in range(n):
            ytmp[i] = y[i] + h_step * (A51 * k0[i] + A52 * k1[i] + A53 * k2[i]
                                       + A54 * k3[i])
        kern.rhs(t + C5 * h_step, &ytmp[0], &k4[0])
        for i in range(n):
            ytmp[i] = y[i] + h_step * (A61 * k0[i] + A62 * k1[i] + A63 * k2[i]
                                       + A64 * k3[i] + A65 * k4[i])
        kern.rhs(t + h_step, &ytmp[0], &k5[0])
        for i in range(n):
            ynew[i] = y[i] + h_step * (B1 * k0[i] + B3 * k2[i] + B4 * k3[i]
                                       + B5 * k4[i] + B6 * k5[i])
        kern.rhs(t + h_step, &ynew[0], &k6[0])
        nfev += 6
        n_steps += 1

        for i in range(n):
            err[i] = h_step * (E1 * k0[i] + E3 * k2[i] + E4 * k3[i]
                               + E5 * k4[i] + E6 * k5[i] + E7 * k6[i])
        err_norm = _scaled_rms(&err[0], &y[0], &ynew[0], rtol, atol, n)

        if err_norm <= 1.0:
            t = t1 if last else t + h_step
            swap_tmp = y
            y = ynew
            ynew = swap_tmp
            swap_tmp = k0
            k0 = k6
            k6 = swap_tmp
            if err_norm == 0.0:
                factor = max_factor
            else:
                factor = SAFETY * err_norm ** -0.2
                if factor > max_factor:
                    factor = max_factor
                elif factor < MIN_FACTOR:
                    factor = MIN_FACTOR
            h = h_step * factor
            max_factor = MAX_FACTOR
            if last:
                out_arr = np.empty(n, dtype=np.complex128)
                out_view = out_arr
                for i in range(n):
                    out_view[i] = y[i]
                return out_arr, n_steps, nfev
        else:
            factor = SAFETY * err_norm ** -0.2
            if factor < MIN_FACTOR:
                factor = MIN_FACTOR
            h = h_step * factor
            max_factor = 1.0
