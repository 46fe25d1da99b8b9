"""Pure-numpy kernel backend.

Reference implementation of the generator action and the adaptive
Dormand-Prince 5(4) stepper.  The compiled backend in ``_core`` follows
exactly the same algorithm (same tableau, same error norm, same step-size
controller); this module is both the import-time fallback and the ground
truth the extension is tested against.
"""

from __future__ import annotations

import numpy as np

from ..errors import IntegrationError
from .terms import OP_BAND, OP_DENSE, OP_DIAG, OP_NONE, PackedTerms, profile_value

__all__ = ["apply_terms", "make_rhs", "integrate_dp54", "integrate_terms"]

# Dormand-Prince 5(4) tableau.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# b - b_hat: weights of the embedded error estimate
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])

_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0
_SAFETY = 0.9


def _band_rows(d: int, off: int) -> tuple[int, int]:
    """Valid row range of a band with entries A[r, r+off]."""
    return (0, d - off) if off >= 0 else (-off, d)


def apply_terms(packed: PackedTerms, t: float, y: np.ndarray, out: np.ndarray) -> None:
    """out <- sum_i coeff_i h_i(t) (L_i @ unvec(y) @ R_i), column-stacked."""
    d = packed.dim
    m = y.reshape(d, d, order="F")
    o_mat = out.reshape(d, d, order="F")
    out[:] = 0.0
    for i in range(packed.n_terms):
        c = packed.coeff[i] * profile_value(packed.profile[i], packed.omega[i], t)
        if c == 0.0:
            continue
        lk = packed.lkind[i]
        if lk == OP_NONE:
            stage = m
        elif lk == OP_DIAG:
            stage = packed.vecs[packed.lidx[i]][:, None] * m
        elif lk == OP_BAND:
            off = packed.loff[i]
            lo, hi = _band_rows(d, off)
            stage = np.zeros((d, d), dtype=np.complex128)
            stage[lo:hi, :] = packed.vecs[packed.lidx[i]][lo:hi, None] * m[lo + off : hi + off, :]
        else:
            stage = packed.denses[packed.lidx[i]].T @ m
        rk = packed.rkind[i]
        if rk == OP_NONE:
            o_mat += c * stage
        elif rk == OP_DIAG:
            o_mat += (c * packed.vecs[packed.ridx[i]])[None, :] * stage
        elif rk == OP_BAND:
            off = packed.roff[i]
            qlo, qhi = _band_rows(d, off)
            w = packed.vecs[packed.ridx[i]]
            o_mat[:, qlo + off : qhi + off] += (c * w[qlo:qhi])[None, :] * stage[:, qlo:qhi]
        else:
            o_mat += c * (stage @ packed.denses[packed.ridx[i]].T)


def make_rhs(packed: PackedTerms):
    """Callback ``f(t, y, out)`` evaluating the packed generator action."""

    def f(t, y, out):
        apply_terms(packed, t, y, out)

    return f


def _rms(v: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.abs(v) ** 2)))


def _initial_step(f, t0, span, y, f0, rtol, atol, nfev_box):
    """Hairer-style starting step from two trial derivative evaluations."""
    scale = atol + rtol * np.abs(y)
    d0 = _rms(y / scale)
    d1 = _rms(f0 / scale)
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h0 = min(h0, span)
    y1 = y + h0 * f0
    f1 = np.empty_like(y)
    f(t0 + h0, y1, f1)
    nfev_box[0] += 1
    d2 = _rms((f1 - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, span)


def integrate_dp54(f, t0: float, t1: float, y0: np.ndarray, rtol: float, atol: float,
                   max_steps: int):
    """Integrate ``dy/dt = f(t, y)`` from t0 to t1 (t1 >= t0).

    ``f(t, y, out)`` writes the derivative into ``out``.  Returns
    ``(y, n_steps, n_rhs)``; raises :class:`IntegrationError` when the step
    budget is exhausted or the step size underflows.
    """
    if t1 < t0:
        raise ValueError("integrate_dp54 requires t1 >= t0")
    y = np.asarray(y0, dtype=np.complex128).copy()
    if t1 == t0:
        return y, 0, 0
    n = y.size
    span = t1 - t0
    k = [np.empty(n, dtype=np.complex128) for _ in range(7)]
    f(t0, y, k[0])
    nfev_box = [1]
    h = _initial_step(f, t0, span, y, k[0], rtol, atol, nfev_box)
    t = t0
    max_factor = _MAX_FACTOR
    n_steps = 0
    tiny = 1e-14 * max(abs(t0), abs(t1), 1.0)
    while True:
        if n_steps >= max_steps:
            raise IntegrationError("step budget exhausted", t)
        last = (t1 - t) <= h
        h_step = (t1 - t) if last else h
        if h_step <= tiny:
            raise IntegrationError("step size underflow", t)
        for s in range(1, 7):
            ys = y + h_step * sum(a * k[j] for j, a in enumerate(_A[s]) if a != 0.0)
            f(t + _C[s] * h_step, ys, k[s])
        nfev_box[0] += 6
        n_steps += 1
        # stage 6 evaluated k[6] at the 5th-order solution (FSAL)
        y_new = y + h_step * (_B[0] * k[0] + _B[2] * k[2] + _B[3] * k[3]
                              + _B[4] * k[4] + _B[5] * k[5])
        err_vec = h_step * (_E[0] * k[0] + _E[2] * k[2] + _E[3] * k[3]
                            + _E[4] * k[4] + _E[5] * k[5] + _E[6] * k[6])
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = _rms(err_vec / scale)
        if err <= 1.0:
            t = t1 if last else t + h_step
            y = y_new
            k[0], k[6] = k[6], k[0]
            factor = max_factor if err == 0.0 else min(max_factor,
                                                       max(_MIN_FACTOR, _SAFETY * err ** -0.2))
            h = h_step * factor
            max_factor = _MAX_FACTOR
            if last:
                return y, n_steps, nfev_box[0]
        else:
            h = h_step * max(_MIN_FACTOR, _SAFETY * err ** -0.2)
            max_factor = 1.0


def integrate_terms(packed: PackedTerms, t0, t1, y0, rtol, atol, max_steps):
    """Packed-term front end to :func:`integrate_dp54`."""
    return integrate_dp54(make_rhs(packed), t0, t1, y0, rtol, atol, max_steps)
