"""Parameter sweeps over the model catalog and criticality diagnostics.

A sweep walks a control parameter (drive amplitude, detuning or coupling)
over a grid, for one or more thermodynamic scales N, runs the one-period
Arnoldi pipeline per point (optionally per symmetry sector), extracts the
leading eigenvalues, the gap and period-averaged observables, and emits a
flat CSV with a fixed schema.  Grid points are independent jobs, so sweeps
are deterministic for a fixed config and seed regardless of worker count.
"""

from __future__ import annotations

import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, CriticalPointError, DegenerateSteadyStateError
from .floquet import (
    ArnoldiConfig,
    FloquetJob,
    arnoldi_eigs,
    gap as spectral_gap,
    period_average,
    steady_state,
)
from .integrate import IntegratorConfig
from .models import (
    KerrParams,
    RabiParams,
    jcm_total,
    kerr_full,
    kerr_rwa,
    kerr_symmetry,
    observable,
    qrm_gme,
)

__all__ = [
    "CSV_HEADER",
    "SweepConfig",
    "SweepRow",
    "SweepResult",
    "run_sweep",
    "criticality_order",
    "estimate_critical_point",
    "check_cutoff_convergence",
]

CSV_HEADER = ("zeta_name,zeta_value,N,sector,eps0_re,eps0_im,eps1_re,eps1_im,"
              "gap,obs_name,obs_value,residual,cutoff,converged,wall_s")

_KERR_MODELS = {"kerr_full": kerr_full, "kerr_rwa": kerr_rwa}
_RABI_MODELS = {"jcm": jcm_total, "qrm_gme": qrm_gme}
_MODELS = {**_KERR_MODELS, **_RABI_MODELS}

_SWEEP_VARS = {
    "F1_tilde": "kerr",
    "Delta": "kerr",
    "F_tilde": "rabi",
    "g": "rabi",
}

_KERR_KEYS = {"omega0", "u_tilde", "f_tilde", "n", "omega_d", "delta",
              "kappa", "eta", "cutoff"}
_RABI_KEYS = {"omega_c", "omega_q", "g", "f_drive", "f_tilde", "omega_d",
              "kappa", "cutoff", "m_levels"}


def _fmt(x: float) -> str:
    """17-significant-digit float serialization (round-trip exact)."""
    return f"{float(x):.17g}"


@dataclass(frozen=True)
class SweepConfig:
    model: str
    params: dict
    sweep_var: str
    grid: tuple
    thermo_n: tuple = (1.0,)
    arnoldi: ArnoldiConfig = field(default_factory=lambda: ArnoldiConfig(n_eigs=6))
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    sectors: tuple | None = None
    observables: tuple = ("photon_number",)
    output: str | None = None
    workers: int = 1
    seed: int = 1234
    avg_nodes: int = 32

    @classmethod
    def from_dict(cls, raw: dict) -> "SweepConfig":
        try:
            return _parse_config(cls, raw)
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, path: str) -> "SweepConfig":
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON config: {exc}") from exc
        return cls.from_dict(raw)

    def grid_values(self) -> np.ndarray:
        start, stop, points, scale = self.grid
        if scale == "log":
            return np.geomspace(start, stop, points)
        return np.linspace(start, stop, points)

    def cutoff_for(self, i_n: int) -> int:
        cut = self.params["cutoff"]
        if isinstance(cut, (list, tuple)):
            return int(cut[i_n])
        return int(cut)


def _parse_config(cls, raw: dict) -> SweepConfig:
    unknown = set(raw) - {"model", "params", "sweep", "thermo_N", "solver",
                          "sectors", "observables", "output", "workers",
                          "seed", "period_average_nodes"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    model = raw["model"]
    if model not in _MODELS:
        raise ConfigError(f"unknown model {model!r}; choose from {sorted(_MODELS)}")
    params = dict(raw["params"])
    family = "kerr" if model in _KERR_MODELS else "rabi"
    allowed = _KERR_KEYS if family == "kerr" else _RABI_KEYS
    bad = set(params) - allowed
    if bad:
        raise ConfigError(f"unknown {family} parameters: {sorted(bad)}")
    if "cutoff" not in params:
        raise ConfigError("params.cutoff is required")

    sweep = raw["sweep"]
    var = sweep["var"]
    if var not in _SWEEP_VARS:
        raise ConfigError(f"unknown sweep variable {var!r}; "
                          f"choose from {sorted(_SWEEP_VARS)}")
    if _SWEEP_VARS[var] != family:
        raise ConfigError(f"sweep variable {var!r} does not apply to model {model!r}")
    grid_raw = sweep["grid"]
    points = int(grid_raw["points"])
    if points < 2:
        raise ConfigError("grid needs at least 2 points")
    scale = grid_raw.get("scale", "linear")
    if scale not in ("linear", "log"):
        raise ConfigError(f"unknown grid scale {scale!r}")
    start, stop = float(grid_raw["start"]), float(grid_raw["stop"])
    if scale == "log" and (start <= 0 or stop <= 0):
        raise ConfigError("log grids need positive endpoints")

    thermo_n = tuple(float(x) for x in raw.get("thermo_N", [1.0]))
    if not thermo_n:
        raise ConfigError("thermo_N must be non-empty")
    if family == "rabi" and any(n != 1.0 for n in thermo_n):
        raise ConfigError("thermo_N rescaling applies to Kerr models only")
    cut = params["cutoff"]
    if isinstance(cut, (list, tuple)) and len(cut) != len(thermo_n):
        raise ConfigError("per-N cutoff list must match thermo_N length")

    solver = raw.get("solver", {})
    arnoldi = ArnoldiConfig(**{"n_eigs": 6, **solver.get("arnoldi", {})})
    if arnoldi.n_eigs < 2:
        raise ConfigError("need at least 2 requested eigenpairs (gap column)")
    integrator = IntegratorConfig(**solver.get("integrator", {}))

    sectors = raw.get("sectors")
    if sectors is not None:
        if family != "kerr" or params.get("n", 1) < 2:
            raise ConfigError("sectors require a Kerr model with n >= 2")
        order = int(params["n"])
        sectors = tuple(int(s) for s in sectors)
        if any(not 0 <= s < order for s in sectors):
            raise ConfigError(f"sector indices must lie in [0, {order})")

    observables = tuple(raw.get("observables", ["photon_number"]))
    for obs in observables:
        if obs not in ("photon_number", "output_field"):
            raise ConfigError(f"unknown observable {obs!r}")
        if obs == "output_field" and family == "kerr":
            raise ConfigError("output_field is undefined for Kerr models")

    if family == "rabi":
        has_f = ("f_drive" in params) + ("f_tilde" in params)
        if var == "F_tilde":
            if has_f:
                raise ConfigError("sweeping F_tilde: omit f_drive/f_tilde from params")
        elif has_f != 1:
            raise ConfigError("give exactly one of f_drive / f_tilde")
        # F_tilde = 2F/g degenerates at small coupling
        uses_f_tilde = var == "F_tilde" or "f_tilde" in params
        g_floor = start if var == "g" else params.get("g", 0.0)
        if uses_f_tilde and g_floor < 0.05 * params["omega_c"]:
            raise ConfigError(
                "rescaled-drive sweeps need g >= 0.05*omega_c "
                "(F_tilde = 2F/g degenerates as g -> 0)")
    if family == "kerr":
        if var == "F1_tilde":
            if params.get("n", 1) != 1:
                raise ConfigError("F1_tilde sweeps the single-photon drive (n = 1)")
            params.pop("f_tilde", None)
        if var == "Delta":
            params.pop("delta", None)
            params.pop("omega_d", None)

    workers = int(raw.get("workers", 1))
    if workers < 1:
        raise ConfigError("workers must be >= 1")

    return cls(
        model=model,
        params=params,
        sweep_var=var,
        grid=(start, stop, points, scale),
        thermo_n=thermo_n,
        arnoldi=arnoldi,
        integrator=integrator,
        sectors=sectors,
        observables=observables,
        output=raw.get("output"),
        workers=workers,
        seed=int(raw.get("seed", 1234)),
        avg_nodes=int(raw.get("period_average_nodes", 32)),
    )


def build_model_params(cfg: SweepConfig, zeta: float, i_n: int):
    """Materialize the model parameter object for one grid point."""
    params = dict(cfg.params)
    params["cutoff"] = cfg.cutoff_for(i_n)
    if cfg.model in _KERR_MODELS:
        if cfg.sweep_var == "F1_tilde":
            params["f_tilde"] = zeta
        else:  # Delta
            params["delta"] = zeta
            params.pop("omega_d", None)
        params["thermo_n"] = cfg.thermo_n[i_n]
        return KerrParams(**params)
    # rabi family
    if cfg.sweep_var == "F_tilde":
        params["f_drive"] = zeta * params["g"] / 2.0
    elif cfg.sweep_var == "g":
        params["g"] = zeta
    if "f_tilde" in params:
        f_tilde = params.pop("f_tilde")
        params["f_drive"] = f_tilde * params["g"] / 2.0
    params["variant"] = cfg.model
    return RabiParams(**params)


@dataclass
class SweepRow:
    zeta_name: str
    zeta_value: float
    thermo_n: float
    sector: int  # -1 for the full space
    eps0: complex
    eps1: complex
    gap: float
    obs_name: str
    obs_value: float
    residual: float
    cutoff: int
    converged: bool
    wall_s: float

    def to_csv_line(self) -> str:
        fields = [
            self.zeta_name,
            _fmt(self.zeta_value),
            _fmt(self.thermo_n),
            str(self.sector),
            _fmt(self.eps0.real), _fmt(self.eps0.imag),
            _fmt(self.eps1.real), _fmt(self.eps1.imag),
            _fmt(self.gap),
            self.obs_name,
            _fmt(self.obs_value),
            _fmt(self.residual),
            str(self.cutoff),
            "true" if self.converged else "false",
            _fmt(self.wall_s),
        ]
        return ",".join(fields)

    @classmethod
    def from_csv_fields(cls, fields: list[str]) -> "SweepRow":
        return cls(
            zeta_name=fields[0],
            zeta_value=float(fields[1]),
            thermo_n=float(fields[2]),
            sector=int(fields[3]),
            eps0=complex(float(fields[4]), float(fields[5])),
            eps1=complex(float(fields[6]), float(fields[7])),
            gap=float(fields[8]),
            obs_name=fields[9],
            obs_value=float(fields[10]),
            residual=float(fields[11]),
            cutoff=int(fields[12]),
            converged=fields[13] == "true",
            wall_s=float(fields[14]),
        )


@dataclass
class SweepResult:
    rows: list

    @property
    def n_failed(self) -> int:
        keys = {(r.zeta_value, r.thermo_n, r.sector): r.converged for r in self.rows}
        return sum(1 for ok in keys.values() if not ok)

    @property
    def n_jobs(self) -> int:
        return len({(r.zeta_value, r.thermo_n, r.sector) for r in self.rows})

    def to_csv(self, path_or_file) -> None:
        close = False
        fh = path_or_file
        if isinstance(path_or_file, str):
            fh = open(path_or_file, "w")
            close = True
        try:
            fh.write(CSV_HEADER + "\n")
            for row in self.rows:
                fh.write(row.to_csv_line() + "\n")
        finally:
            if close:
                fh.close()

    @classmethod
    def from_csv(cls, path: str) -> "SweepResult":
        with open(path) as fh:
            header = fh.readline().strip()
            if header != CSV_HEADER:
                raise ConfigError(f"unexpected CSV header: {header!r}")
            rows = [SweepRow.from_csv_fields(line.rstrip("\n").split(","))
                    for line in fh if line.strip()]
        return cls(rows)

    def select(self, thermo_n=None, sector=None, obs_name=None):
        out = self.rows
        if thermo_n is not None:
            out = [r for r in out if r.thermo_n == thermo_n]
        if sector is not None:
            out = [r for r in out if r.sector == sector]
        if obs_name is not None:
            out = [r for r in out if r.obs_name == obs_name]
        return out


def _build_generator(cfg: SweepConfig, params):
    return _MODELS[cfg.model](params)


def run_point(cfg: SweepConfig, i_z: int, i_n: int, sector: int | None) -> list:
    """Run one (zeta, N, sector) job; one output row per observable."""
    t_start = time.perf_counter()
    zeta = float(cfg.grid_values()[i_z])
    n_val = cfg.thermo_n[i_n]
    sector_col = -1 if sector is None else sector
    params = build_model_params(cfg, zeta, i_n)
    obs_names = cfg.observables if cfg.observables else ("none",)

    def failed_rows(residual=np.nan):
        wall = time.perf_counter() - t_start
        return [SweepRow(cfg.sweep_var, zeta, n_val, sector_col,
                         complex(np.nan, np.nan), complex(np.nan, np.nan),
                         np.nan, name, np.nan, residual, params.cutoff,
                         False, wall)
                for name in obs_names]

    try:
        gen = _build_generator(cfg, params)
        job = FloquetJob(gen, integrator=cfg.integrator, arnoldi=cfg.arnoldi)
        sector_arg = None
        if sector is not None:
            sector_arg = (kerr_symmetry(params), sector)
        spectrum = arnoldi_eigs(job, sector=sector_arg)
    except Exception as exc:  # per-row failures never abort the sweep
        print(f"[sweep] point zeta={zeta:g} N={n_val:g} sector={sector_col} "
              f"failed: {exc}", file=sys.stderr)
        residual = np.nan
        res = getattr(exc, "residuals", None)
        if res is not None:
            residual = float(np.max(res))
        return failed_rows(residual)

    eps0 = complex(spectrum.eigenvalues[0])
    eps1 = complex(spectrum.eigenvalues[1]) if spectrum.eigenvalues.size > 1 \
        else complex(np.nan, np.nan)
    gap_val = float(abs(eps1 - eps0)) if spectrum.eigenvalues.size > 1 else np.nan
    residual = float(np.max(spectrum.residuals))
    converged = True

    steady_bearing = sector in (None, 0)
    if steady_bearing and abs(abs(eps0) - 1.0) > 1e-6:
        converged = False

    obs_values = {name: np.nan for name in obs_names}
    if steady_bearing and converged and cfg.observables:
        try:
            rho = steady_state(spectrum)
            for name in cfg.observables:
                op = observable(name, params)
                val = period_average(job, rho, op, nodes=cfg.avg_nodes)
                obs_values[name] = float(val.real)
        except DegenerateSteadyStateError as exc:
            print(f"[sweep] zeta={zeta:g} N={n_val:g}: {exc}", file=sys.stderr)
            converged = False
        except Exception as exc:
            print(f"[sweep] zeta={zeta:g} N={n_val:g} observable failed: {exc}",
                  file=sys.stderr)
            converged = False

    wall = time.perf_counter() - t_start
    return [SweepRow(cfg.sweep_var, zeta, n_val, sector_col, eps0, eps1,
                     gap_val, name, obs_values[name], residual, params.cutoff,
                     converged, wall)
            for name in obs_names]


def _job_list(cfg: SweepConfig):
    sectors = [None] if cfg.sectors is None else list(cfg.sectors)
    points = cfg.grid[2]
    return [(i_z, i_n, sec)
            for i_z in range(points)
            for i_n in range(len(cfg.thermo_n))
            for sec in sectors]


def _worker(args):
    cfg, i_z, i_n, sector = args
    return (i_z, i_n, sector), run_point(cfg, i_z, i_n, sector)


def run_sweep(cfg: SweepConfig) -> SweepResult:
    """Execute all grid jobs (optionally on a process pool) in grid order."""
    jobs = _job_list(cfg)
    results = {}
    if cfg.workers == 1:
        for job in jobs:
            key, rows = _worker((cfg,) + job)
            results[key] = rows
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            for key, rows in pool.map(_worker, [(cfg,) + j for j in jobs]):
                results[key] = rows
    ordered = []
    for job in jobs:
        ordered.extend(results[job])
    return SweepResult(ordered)


def check_cutoff_convergence(cfg: SweepConfig, i_z: int, i_n: int,
                             obs_name: str | None = None,
                             rel_tol: float = 1e-3) -> dict:
    """Compare an observable at the working cutoff and at cutoff * 1.25.

    Returns the two values and whether the relative shift is below
    ``rel_tol`` (the convergence requirement on every reported observable).
    """
    obs_name = obs_name or cfg.observables[0]
    base = run_point(cfg, i_z, i_n, None)
    cut = cfg.cutoff_for(i_n)
    bumped = replace(cfg, params={**cfg.params,
                                  "cutoff": int(np.ceil(1.25 * cut))})
    bigger = run_point(bumped, i_z, i_n, None)
    v0 = next(r.obs_value for r in base if r.obs_name == obs_name)
    v1 = next(r.obs_value for r in bigger if r.obs_name == obs_name)
    shift = abs(v1 - v0) / max(abs(v1), 1e-12)
    return {"value": v0, "value_bumped": v1, "rel_shift": shift,
            "converged": bool(shift < rel_tol)}


# ---------------------------------------------------------------------------
# criticality diagnostics
# ---------------------------------------------------------------------------


def _steady_series(result: SweepResult, obs_name: str, thermo_n: float):
    """(zeta, value) arrays for the steady-state-bearing rows of one N."""
    rows = [r for r in result.rows
            if r.obs_name == obs_name and r.thermo_n == thermo_n
            and r.sector in (-1, 0)]
    rows.sort(key=lambda r: r.zeta_value)
    if not rows:
        raise ValueError(f"no rows for observable {obs_name!r} at N={thermo_n}")
    if any(not r.converged for r in rows):
        bad = [r.zeta_value for r in rows if not r.converged]
        raise ValueError(f"non-converged rows at zeta={bad}; cannot differentiate")
    zetas = np.array([r.zeta_value for r in rows])
    vals = np.array([r.obs_value for r in rows])
    return zetas, vals, rows


def _require_uniform(zetas: np.ndarray) -> float:
    steps = np.diff(zetas)
    h = steps[0]
    if not np.all(np.abs(steps - h) <= 1e-9 * max(abs(h), 1e-300)):
        raise ValueError("criticality diagnostics need a uniform grid")
    return float(h)


def _central_derivative(zetas, vals, order):
    """Repeated second-order central first differences."""
    h = _require_uniform(zetas)
    if len(vals) < 2 * order + 1:
        raise ValueError(f"grid too short for an order-{order} stencil "
                         f"({len(vals)} points)")
    z = np.asarray(zetas, dtype=float)
    v = np.asarray(vals, dtype=float)
    for _ in range(order):
        v = (v[2:] - v[:-2]) / (2.0 * h)
        z = z[1:-1]
    return z, v


@dataclass
class DerivativeDiagnostics:
    observable: str
    order: int
    per_n: dict  # N -> {"zeta": array, "derivative": array, "peak_zeta", "peak_value"}
    growth_factors: list  # [(N_a, N_b, |peak_b| / |peak_a|)]

    def to_json_dict(self) -> dict:
        return {
            "observable": self.observable,
            "order": self.order,
            "per_N": {
                _fmt(n): {
                    "peak_zeta": _fmt(entry["peak_zeta"]),
                    "peak_value": _fmt(entry["peak_value"]),
                    "zeta": [_fmt(z) for z in entry["zeta"]],
                    "derivative": [_fmt(v) for v in entry["derivative"]],
                }
                for n, entry in self.per_n.items()
            },
            "growth_factors": [
                {"N_from": _fmt(a), "N_to": _fmt(b), "factor": _fmt(f)}
                for a, b, f in self.growth_factors
            ],
        }


def criticality_order(result: SweepResult, observable: str, order: int
                      ) -> DerivativeDiagnostics:
    """m-th central-difference derivative of an observable along the sweep.

    Reports the location and magnitude of the largest |derivative| per N
    and the growth of that peak across consecutive N values (the divergence
    proxy for a transition of the given order in the large-N limit).
    """
    if order < 1:
        raise ValueError("derivative order must be >= 1")
    n_values = sorted({r.thermo_n for r in result.rows})
    per_n = {}
    for n_val in n_values:
        zetas, vals, _ = _steady_series(result, observable, n_val)
        z, dv = _central_derivative(zetas, vals, order)
        peak = int(np.argmax(np.abs(dv)))
        per_n[n_val] = {"zeta": z, "derivative": dv,
                        "peak_zeta": float(z[peak]),
                        "peak_value": float(dv[peak])}
    growth = []
    for a, b in zip(n_values, n_values[1:]):
        pa = abs(per_n[a]["peak_value"])
        pb = abs(per_n[b]["peak_value"])
        growth.append((a, b, pb / pa if pa > 0 else np.inf))
    return DerivativeDiagnostics(observable, order, per_n, growth)


def _parabolic_refine(zetas, vals, i):
    """Vertex of the parabola through the three points around a minimum."""
    z0, h = zetas[i], zetas[i + 1] - zetas[i]
    f_m, f_0, f_p = vals[i - 1], vals[i], vals[i + 1]
    denom = f_m - 2.0 * f_0 + f_p
    if denom <= 0:
        return float(z0)
    return float(z0 + 0.5 * h * (f_m - f_p) / denom)


@dataclass
class CriticalPointEstimate:
    thermo_n: float
    zeta_gap: float          # gap-minimum estimate (primary)
    min_gap: float
    zeta_deriv: float | None  # derivative-peak cross-check
    grid_step: float
    consistent: bool | None   # None when no cross-check was possible


def estimate_critical_point(result: SweepResult, observable: str | None = None
                            ) -> list:
    """Per-N critical-point estimates from the interior gap minimum.

    The primary estimate is the parabola-refined interior minimum of the
    spectral gap; the peak of |d<O>/dzeta| serves as a cross-check when an
    observable column is available.  A discrepancy beyond two grid steps is
    flagged (``consistent=False``), never averaged.  Raises
    :class:`CriticalPointError` when no N has an interior gap minimum.
    """
    n_values = sorted({r.thermo_n for r in result.rows})
    estimates = []
    failures = []
    for n_val in n_values:
        rows = [r for r in result.rows
                if r.thermo_n == n_val and r.sector in (-1, 0) and r.converged]
        seen = {}
        for r in rows:
            seen[r.zeta_value] = r.gap
        zetas = np.array(sorted(seen))
        gaps = np.array([seen[z] for z in zetas])
        if len(zetas) < 3:
            failures.append(f"N={n_val:g}: fewer than 3 converged points")
            continue
        i = int(np.argmin(gaps))
        if i == 0 or i == len(gaps) - 1:
            failures.append(f"N={n_val:g}: no interior gap minimum "
                            f"(argmin at the {'left' if i == 0 else 'right'} edge)")
            continue
        zeta_c = _parabolic_refine(zetas, gaps, i)
        h = float(zetas[1] - zetas[0])
        zeta_deriv = None
        consistent = None
        if observable is not None:
            try:
                diag = criticality_order(result, observable, 1)
                zeta_deriv = diag.per_n[n_val]["peak_zeta"]
                consistent = abs(zeta_deriv - zeta_c) <= 2.0 * h
            except ValueError:
                pass
        estimates.append(CriticalPointEstimate(
            thermo_n=n_val, zeta_gap=zeta_c, min_gap=float(gaps[i]),
            zeta_deriv=zeta_deriv, grid_step=h, consistent=consistent))
    if not estimates:
        raise CriticalPointError("; ".join(failures) or "empty sweep result")
    return estimates
