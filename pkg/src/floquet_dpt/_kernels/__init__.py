"""Kernel backend selection.

The hot loops (generator action + adaptive stepper) exist twice: a Cython
extension (``_core``) and a numpy reference (``pyref``).  The compiled
backend is used when importable; setting ``FLOQUET_DPT_PURE_PYTHON=1``
forces the fallback.  Both expose the same two entry points:

    apply_terms(packed, t, y, out)
    integrate_terms(packed, t0, t1, y0, rtol, atol, max_steps)

and are interchangeable up to floating-point roundoff (asserted by the
equivalence tests and compared by ``benchmarks/bench_kernels.py``).
"""

from __future__ import annotations

import os

from . import pyref, terms  # noqa: F401  (terms re-exported for convenience)

_FORCE_PURE = os.environ.get("FLOQUET_DPT_PURE_PYTHON", "").strip() not in ("", "0")

if _FORCE_PURE:
    _core = None
else:
    try:
        from . import _core  # type: ignore[attr-defined]
    except ImportError:
        _core = None

HAVE_COMPILED = _core is not None
active = _core if HAVE_COMPILED else pyref


def backend_name() -> str:
    return "compiled" if HAVE_COMPILED else "python"


def apply_terms(packed, t, y, out):
    active.apply_terms(packed, t, y, out)


def integrate_terms(packed, t0, t1, y0, rtol, atol, max_steps):
    return active.integrate_terms(packed, t0, t1, y0, rtol, atol, max_steps)
