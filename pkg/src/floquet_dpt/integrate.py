"""Generator-driven propagation of vectorized states.

Two propagation routes live here:

* :func:`integrate` -- the adaptive embedded Runge-Kutta 5(4) solver
  (Dormand-Prince coefficients), valid for any generator and any time
  window.  This is the route the one-period propagator is defined by.
* :func:`static_expm_apply` -- ``exp(L*dt) v`` for *time-independent*
  term-structured generators, evaluated by scaled Taylor summation with
  only matrix-free actions.  Used as an optional fast path when
  propagating static models over a period; agrees with :func:`integrate`
  to solver accuracy and is cross-checked against it in the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._kernels import pyref
from .generators import TimePeriodicGenerator

__all__ = ["IntegratorConfig", "integrate", "static_expm_apply"]


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances and budget of the adaptive stepper."""

    rtol: float = 1e-10
    atol: float = 1e-12
    max_steps: int = 10_000_000
    method: str = "dormand-prince-5(4)"
    static_fast_path: bool = True

    def __post_init__(self):
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("tolerances must be strictly positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.method != "dormand-prince-5(4)":
            raise ValueError(f"unknown integrator method {self.method!r}")


DEFAULT_CONFIG = IntegratorConfig()


def integrate(
    gen: TimePeriodicGenerator,
    v: np.ndarray,
    t0: float,
    t1: float,
    cfg: IntegratorConfig = DEFAULT_CONFIG,
) -> np.ndarray:
    """Solve ``dv/dt = L(t) v`` from t0 to t1 and return v(t1).

    Deterministic for a fixed configuration; raises
    :class:`~floquet_dpt.errors.IntegrationError` carrying the time reached
    if the step budget runs out.
    """
    if t1 < t0:
        raise ValueError("integrate requires t1 >= t0")
    v = np.ascontiguousarray(v, dtype=np.complex128)
    if gen.terms is not None:
        y, _, _ = _kernels.integrate_terms(gen.packed, float(t0), float(t1), v,
                                           cfg.rtol, cfg.atol, cfg.max_steps)
        return y

    def f(t, y, out):
        out[:] = gen.action(t, y)

    y, _, _ = pyref.integrate_dp54(f, float(t0), float(t1), v,
                                   cfg.rtol, cfg.atol, cfg.max_steps)
    return y


# ---------------------------------------------------------------------------
# exp(L*dt) v for static generators: scaled Taylor summation
# ---------------------------------------------------------------------------

_TAYLOR_DEGREES = (5, 10, 15, 20, 25, 30, 35, 40, 45, 50, 55)
_UNIT_ROUNDOFF = 2.0 ** -53


def _log_taylor_tail(theta: float, m: int) -> float:
    """log( sum_{k>m} theta^k / k! ), summed directly in log space."""
    logs = [k * math.log(theta) - math.lgamma(k + 1) for k in range(m + 1, m + 400)]
    peak = max(logs)
    return peak + math.log(sum(math.exp(x - peak) for x in logs))


def _solve_theta(m: int) -> float:
    """Largest theta with truncation tail <= u * e^theta at degree m."""
    target = math.log(_UNIT_ROUNDOFF)
    lo, hi = 1e-8, 120.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _log_taylor_tail(mid, m) - mid <= target:
            lo = mid
        else:
            hi = mid
    return lo


_THETA = {m: _solve_theta(m) for m in _TAYLOR_DEGREES}


def _one_norm_bound(gen: TimePeriodicGenerator) -> float:
    """Upper bound on the 1-norm of the (static) superoperator.

    For a term ``L rho R`` the superoperator is ``kron(R.T, L)`` whose
    1-norm is ``norm1(L) * norminf(R)``; summing term bounds overestimates,
    which only makes the Taylor scaling more conservative.
    """
    total = 0.0
    for term in gen.terms:
        n1 = 1.0 if term.left is None else float(np.max(np.sum(np.abs(term.left), axis=0)))
        ninf = 1.0 if term.right is None else float(np.max(np.sum(np.abs(term.right), axis=1)))
        total += abs(term.coeff) * n1 * ninf
    return total


def static_expm_apply(gen: TimePeriodicGenerator, v: np.ndarray, dt: float) -> np.ndarray:
    """Apply ``exp(L*dt)`` to a vectorized state, matrix-free.

    Requires a static term-structured generator.  The scaling ``s`` and
    Taylor degree ``m`` are chosen from a rigorous norm bound so each
    substep is summed to unit roundoff; early termination stops a substep
    once two consecutive Taylor increments are negligible.
    """
    if gen.terms is None or not gen.is_static:
        raise TypeError("static_expm_apply requires a static term-structured generator")
    v = np.ascontiguousarray(v, dtype=np.complex128)
    bound = _one_norm_bound(gen) * abs(dt)
    if bound == 0.0:
        return v.copy()
    best = None
    for m in _TAYLOR_DEGREES:
        s = max(1, math.ceil(bound / _THETA[m]))
        cost = s * m
        if best is None or cost < best[0]:
            best = (cost, s, m)
    _, s, m = best
    packed = gen.packed
    f = v.copy()
    b = np.empty_like(v)
    tmp = np.empty_like(v)
    h = dt / s
    for _ in range(s):
        b[:] = f
        prev_norm = math.inf
        for j in range(1, m + 1):
            _kernels.apply_terms(packed, 0.0, b, tmp)
            np.multiply(tmp, h / j, out=b)
            f += b
            b_norm = float(np.linalg.norm(b))
            if prev_norm + b_norm <= _UNIT_ROUNDOFF * float(np.linalg.norm(f)):
                break
            prev_norm = b_norm
    return f
