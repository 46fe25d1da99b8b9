"""Floquet propagator spectra for driven-dissipative quantum systems.

Builds time-periodic Lindblad/GME generators for driven Kerr resonators and
light-matter models, propagates vectorized density matrices over one period
matrix-free, extracts the dominant propagator spectrum by restarted Arnoldi
iteration (optionally resolved into weak-symmetry sectors), and sweeps model
parameters to locate dissipative phase transitions.
"""

from ._kernels import HAVE_COMPILED, backend_name
from .errors import (
    ConfigError,
    ConvergenceError,
    CriticalPointError,
    DegenerateSteadyStateError,
    FloquetDptError,
    IntegrationError,
)
from .generators import Term, TimePeriodicGenerator
from .integrate import IntegratorConfig, integrate, static_expm_apply
from .linalg import expm, kron, unvec, vec

__all__ = [
    "HAVE_COMPILED",
    "backend_name",
    "Term",
    "TimePeriodicGenerator",
    "IntegratorConfig",
    "integrate",
    "static_expm_apply",
    "expm",
    "kron",
    "vec",
    "unvec",
    "FloquetDptError",
    "IntegrationError",
    "ConvergenceError",
    "DegenerateSteadyStateError",
    "ConfigError",
    "CriticalPointError",
]

__version__ = "0.1.0"
