#!/usr/bin/env python3
"""Benchmark: compiled kernels vs the pure-numpy fallback.

Times the generator action (the inner-loop operation of everything in this
package) and one full period propagation for three representative models.
Run after building the extension:

    python3 benchmarks/bench_kernels.py [--quick]
"""

import argparse
import time

import numpy as np

from floquet_dpt import _kernels
from floquet_dpt._kernels import pyref
from floquet_dpt.models import KerrParams, RabiParams, jcm_total, kerr_full, qrm_gme


def build_cases():
    return [
        ("kerr_full n=1 (cutoff 30)",
         kerr_full(KerrParams(omega0=50.0, u_tilde=10.0, f_tilde=1.5, n=1,
                              delta=-80.0, cutoff=30))),
        ("jcm (cutoff 40)",
         jcm_total(RabiParams(omega_c=50.0, omega_q=50.0, g=10.0, f_drive=5.0,
                              omega_d=50.0, cutoff=40, variant="jcm"))),
        ("qrm_gme (M=14)",
         qrm_gme(RabiParams(omega_c=50.0, omega_q=50.0, g=25.0, f_drive=1.0,
                            omega_d=50.0, cutoff=40, m_levels=14,
                            variant="qrm_gme"))),
    ]


def time_call(fn, min_time=0.2):
    fn()  # warm up
    n = 0
    start = time.perf_counter()
    while True:
        fn()
        n += 1
        elapsed = time.perf_counter() - start
        if elapsed > min_time and n >= 3:
            return elapsed / n


def bench_rhs(gen, backend, v, out, repeats=50):
    packed = gen.packed

    def run():
        for _ in range(repeats):
            backend.apply_terms(packed, 0.1, v, out)

    return time_call(run) / repeats


def bench_period(gen, backend, v, rtol=1e-8, atol=1e-10):
    packed = gen.packed

    def run():
        backend.integrate_terms(packed, 0.0, gen.period, v, rtol, atol, 10**7)

    return time_call(run)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true",
                        help="skip the (slow) pure-python period propagation")
    args = parser.parse_args()

    if not _kernels.HAVE_COMPILED:
        print("compiled kernels are NOT available; nothing to compare")
        return

    from floquet_dpt._kernels import _core

    rng = np.random.default_rng(1)
    print(f"{'case':32s} {'op':14s} {'compiled':>12s} {'python':>12s} {'speedup':>8s}")
    for name, gen in build_cases():
        n = gen.dim * gen.dim
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        v /= np.linalg.norm(v)
        out = np.empty_like(v)

        t_c = bench_rhs(gen, _core, v, out)
        t_p = bench_rhs(gen, pyref, v, out)
        print(f"{name:32s} {'rhs eval':14s} {t_c * 1e6:10.1f}us {t_p * 1e6:10.1f}us "
              f"{t_p / t_c:7.1f}x")

        t_c = bench_period(gen, _core, v)
        if args.quick:
            print(f"{name:32s} {'period prop':14s} {t_c * 1e3:10.1f}ms {'skipped':>12s}")
        else:
            t_p = bench_period(gen, pyref, v)
            print(f"{name:32s} {'period prop':14s} {t_c * 1e3:10.1f}ms "
                  f"{t_p * 1e3:10.1f}ms {t_p / t_c:7.1f}x")


if __name__ == "__main__":
    main()
