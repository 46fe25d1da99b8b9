"""Command-line front end.

Subcommands:

* ``floquet-dpt run --config cfg.json [--workers N] [--seed S] [--out out.csv]``
* ``floquet-dpt diag --input sweep.csv --observable photon_number --order 2``
* ``floquet-dpt validate --config cfg.json``

Exit codes: 0 success, 1 config error, 2 partial per-point failures,
3 total failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from .errors import ConfigError, CriticalPointError
from .sweep import (
    SweepConfig,
    SweepResult,
    criticality_order,
    estimate_critical_point,
    run_sweep,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_PARTIAL = 2
EXIT_TOTAL = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="floquet-dpt",
        description="One-period propagator spectra and dissipative-phase-"
                    "transition sweeps for driven open quantum systems.")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute a sweep config and write CSV")
    run_p.add_argument("--config", required=True, help="JSON sweep config")
    run_p.add_argument("--workers", type=int, default=None,
                       help="override worker-process count")
    run_p.add_argument("--seed", type=int, default=None,
                       help="override the RNG seed recorded in the config")
    run_p.add_argument("--out", default=None, help="override the output CSV path")

    diag_p = sub.add_parser("diag", help="finite-difference criticality diagnostics")
    diag_p.add_argument("--input", required=True, help="sweep CSV")
    diag_p.add_argument("--observable", required=True)
    diag_p.add_argument("--order", type=int, required=True,
                        help="derivative order m")
    diag_p.add_argument("--out", default=None,
                        help="write the JSON report here instead of stdout")

    val_p = sub.add_parser("validate", help="check a config without running it")
    val_p.add_argument("--config", required=True)
    return parser


def _cmd_run(args) -> int:
    try:
        cfg = SweepConfig.from_json(args.config)
        if args.workers is not None:
            if args.workers < 1:
                raise ConfigError("workers must be >= 1")
            cfg = replace(cfg, workers=args.workers)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed,
                          arnoldi=replace(cfg.arnoldi, seed=args.seed))
        out_path = args.out or cfg.output
        if out_path is None:
            raise ConfigError("no output path (config key 'output' or --out)")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    result = run_sweep(cfg)
    result.to_csv(out_path)
    n_jobs = result.n_jobs
    n_failed = result.n_failed
    print(f"wrote {out_path}: {len(result.rows)} rows, "
          f"{n_jobs - n_failed}/{n_jobs} points converged")
    if n_failed == n_jobs:
        return EXIT_TOTAL
    if n_failed > 0:
        return EXIT_PARTIAL
    return EXIT_OK


def _cmd_diag(args) -> int:
    try:
        result = SweepResult.from_csv(args.input)
    except (OSError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        diag = criticality_order(result, args.observable, args.order)
        report = diag.to_json_dict()
        try:
            estimates = estimate_critical_point(result, args.observable)
            report["critical_points"] = [
                {"N": e.thermo_n, "zeta_gap_minimum": e.zeta_gap,
                 "min_gap": e.min_gap, "zeta_derivative_peak": e.zeta_deriv,
                 "consistent": e.consistent}
                for e in estimates
            ]
        except CriticalPointError as exc:
            report["critical_points"] = []
            report["critical_point_note"] = str(exc)
    except ValueError as exc:
        print(f"diagnostics error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    text = json.dumps(report, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
        print(f"wrote {args.out}")
    else:
        print(text)
    return EXIT_OK


def _cmd_validate(args) -> int:
    try:
        cfg = SweepConfig.from_json(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    points = cfg.grid[2]
    sectors = "full space" if cfg.sectors is None else f"sectors {list(cfg.sectors)}"
    print(f"ok: model={cfg.model} var={cfg.sweep_var} points={points} "
          f"N={list(cfg.thermo_n)} {sectors} observables={list(cfg.observables)}")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        code = _cmd_run(args)
    elif args.command == "diag":
        code = _cmd_diag(args)
    else:
        code = _cmd_validate(args)
    return code


if __name__ == "__main__":
    sys.exit(main())
