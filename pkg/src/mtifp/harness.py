"""Experiment engine: refinement sweeps, error tables, traces, config.

The error tables refine one axis at a time against the stored fine
reference: the spatial sweep halves h at fixed tiny tau, the temporal sweep
quarters tau at fixed h.  Rates follow the table convention
log(e_coarse/e_fine)/log(factor) with factor 2 per spatial column and 4 per
temporal column, and the uniform row is the columnwise max over the
configured eps set.

Reports serialize to a deterministic CSV dialect (bit-identical bytes for
identical inputs; no wall clock in the file), so diffing two sweep outputs
is meaningful.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
import yaml

from . import __version__
from .oracle import ReferenceSolution, reference_solution
from .solver import (
    DivergenceError,
    SolverConfig,
    SolverState,
    from_spectral,
    init,
    propagate,
)
from .spectral import FieldHat, sample, sobolev_norm
from .coefficients import mode_frequencies

DOMAIN = (-16.0, 16.0)
EPS_TABLE = tuple(0.5 / 2**k for k in (0, 1, 2, 3, 4, 5, 7, 9, 11, 13))
H_TABLE = (1.0, 0.5, 0.25, 0.125)
TAU_TABLE = tuple(0.2 / 4**k for k in range(7))
_CSV_HEADER = "# mti-fp report v1"
_UNIFORM_LABEL = "uniform"


# ---------------------------------------------------------------------------
# Error metric
# ---------------------------------------------------------------------------

def _endpoint_gap(m_run: int, run_tau: float, reference) -> float:
    """Exact difference between the run and reference final times.

    A constant-step run lands on ``m * fl(tau)``, not on the target T, so two
    step sizes aiming at the same T end a few ulp apart.  The gap is formed
    in exact rational arithmetic over the binary values; rounding it once at
    the end keeps all 53 bits of a ~1e-17 result.
    """
    tau_ref = getattr(reference, "tau_ref", 0.0)
    if tau_ref > 0.0:
        t_ref = round(reference.t_final / tau_ref) * Fraction(tau_ref)
    else:
        t_ref = Fraction(reference.t_final)  # analytic, exactly at t_final
    return float(m_run * Fraction(run_tau) - t_ref)


def error_norm(run_state: SolverState, reference,
               run_tau: float | None = None) -> float:
    """H^2 distance at final time, evaluated at the run's nodes.

    The reference is sampled onto the run grid (its unresolved tail folds
    onto aliases, which is what comparing nodal values means) and the
    difference is measured in the spectral H^2 norm scaled by sqrt(b - a),
    the normalization under which the weighted coefficient sum equals the
    continuous Sobolev integral of the interpolant.

    ``run_tau`` turns on endpoint alignment.  The last-bit mismatch between
    ``m * fl(tau)`` endpoints is invisible to the fields themselves but is
    amplified by the 1/eps^2 carrier when the error is taken: at eps ~ 6e-5
    a 3e-17 gap rotates the state by more than the finest-step error being
    measured.  With the run's tau known, the reference is moved to the run's
    exact endpoint through its stored velocity (the residual is quadratic in
    a ~1e-17 gap, far below roundoff).
    """
    ref_u: FieldHat = reference.u
    run_u: FieldHat = run_state.u
    rg, cg = ref_u.grid, run_u.grid
    if (rg.a, rg.b) != (cg.a, cg.b):
        raise ValueError(
            f"incompatible grids: run domain [{cg.a}, {cg.b}] vs reference "
            f"[{rg.a}, {rg.b}]")
    if rg.n % cg.n != 0:
        raise ValueError(
            f"incompatible grids: run n = {cg.n} does not divide "
            f"reference n = {rg.n}")
    down = ref_u if rg.n == cg.n else sample(ref_u, cg.n)
    ref_coeffs = down.coeffs
    if run_tau is not None:
        gap = _endpoint_gap(run_state.step_index, run_tau, reference)
        if gap != 0.0:
            ref_ud: FieldHat = reference.u_dot
            down_ud = ref_ud if rg.n == cg.n else sample(ref_ud, cg.n)
            ref_coeffs = ref_coeffs + gap * down_ud.coeffs
    diff = FieldHat(cg, run_u.coeffs - ref_coeffs)
    return math.sqrt(cg.b - cg.a) * sobolev_norm(diff, order=2)


def linear_reference(eps: float, *, n: int = 1024, t_final: float = 1.0,
                     initial_data: str = "gaussian") -> ReferenceSolution:
    """Exact lam = 0 solution on the reference grid: every mode evolves by
    cos/sin of its omega.  Reference provider for linear sweeps."""
    cfg = SolverConfig(a=DOMAIN[0], b=DOMAIN[1], n=n, eps=eps, tau=t_final,
                       t_final=t_final, lam=0.0, initial_data=initial_data)
    s0 = init(cfg)
    grid = s0.u.grid
    fr = mode_frequencies(grid.mu, eps)
    cosw = np.cos(fr.omega * t_final)
    sinw = np.sin(fr.omega * t_final)
    u = cosw * s0.u.coeffs + sinw / fr.omega * s0.u_dot.coeffs
    ud = -fr.omega * sinw * s0.u.coeffs + cosw * s0.u_dot.coeffs
    return ReferenceSolution(u=FieldHat(grid, u), u_dot=FieldHat(grid, ud),
                             eps=eps, tau_ref=0.0, t_final=t_final,
                             path=Path("<analytic>"))


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReportRow:
    eps: float
    errors: tuple  # float per column; None for a failed cell
    rates: tuple   # len(columns) - 1 entries; None beside a failed cell


@dataclass(frozen=True)
class ConvergenceReport:
    axis: str                      # "spatial" | "temporal"
    resolutions: tuple             # column labels: h or tau values
    rows: tuple                    # ReportRow per eps, input order
    uniform_row: tuple | None      # columnwise max over rows
    uniform_rates: tuple | None
    metadata: tuple                # ordered (key, value) string pairs
    failures: tuple = ()           # (eps, resolution, message)

    def row(self, eps: float) -> ReportRow:
        for r in self.rows:
            if r.eps == eps:
                return r
        raise KeyError(f"no row for eps = {eps}")


def _rate_base(axis: str) -> float:
    return 2.0 if axis == "spatial" else 4.0


def compute_rates(errors: Sequence, axis: str) -> tuple:
    """log(e_coarse/e_fine) / log(refinement factor) per adjacent pair."""
    base = _rate_base(axis)
    out = []
    for coarse, fine in zip(errors, errors[1:]):
        if coarse is None or fine is None or coarse <= 0 or fine <= 0:
            out.append(None)
        else:
            out.append(math.log(coarse / fine) / math.log(base))
    return tuple(out)


def _uniform(rows: Sequence[ReportRow], axis: str):
    if not rows:
        return None, None
    cols = len(rows[0].errors)
    row = []
    for j in range(cols):
        cell = [r.errors[j] for r in rows]
        row.append(None if any(c is None for c in cell) else max(cell))
    row = tuple(row)
    return row, compute_rates(row, axis)


def _assemble(axis, resolutions, eps_values, cells, failures, metadata):
    rows = []
    for eps in eps_values:
        errors = tuple(cells.get((eps, res)) for res in resolutions)
        rows.append(ReportRow(eps=eps, errors=errors,
                              rates=compute_rates(errors, axis)))
    uniform_row, uniform_rates = _uniform(rows, axis)
    return ConvergenceReport(axis=axis, resolutions=tuple(resolutions),
                             rows=tuple(rows), uniform_row=uniform_row,
                             uniform_rates=uniform_rates,
                             metadata=tuple(metadata),
                             failures=tuple(failures))


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

def _n_for_h(h: float) -> int:
    length = DOMAIN[1] - DOMAIN[0]
    n = round(length / h)
    if abs(n * h - length) > 1e-12 * length:
        raise ValueError(f"h = {h} does not divide the domain length {length}")
    return n


def _solver_config(eps, tau, n, t_final, lam, initial_data) -> SolverConfig:
    return SolverConfig(a=DOMAIN[0], b=DOMAIN[1], n=n, eps=eps, tau=tau,
                        t_final=t_final, lam=lam, initial_data=initial_data)


ReferenceProvider = Callable[[float], ReferenceSolution]


def _run_sweep(axis, eps_values, resolutions, cell_config, *,
               reference: ReferenceProvider, threads, metadata):
    """Shared engine: references per eps, then independent cells over a
    bounded pool; assembly is single-writer after all cells complete."""
    eps_values = tuple(float(e) for e in eps_values)
    resolutions = tuple(float(r) for r in resolutions)
    threads = max(1, int(threads))
    refs: dict[float, ReferenceSolution] = {}
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for eps, ref in zip(eps_values,
                            pool.map(reference, eps_values)):
            refs[eps] = ref

        def cell(job):
            eps, res = job
            state = propagate(cell_config(eps, res))
            return error_norm(state, refs[eps])

        jobs = [(eps, res) for eps in eps_values for res in resolutions]
        cells: dict = {}
        failures = []
        for job, outcome in zip(jobs, pool.map(_guard(cell), jobs)):
            value, message = outcome
            cells[job] = value
            if message is not None:
                failures.append((*job, message))
    return _assemble(axis, resolutions, eps_values, cells, failures, metadata)


def _guard(fn):
    def wrapped(job):
        try:
            return fn(job), None
        except DivergenceError as exc:
            return None, str(exc)
    return wrapped


def run_spatial_sweep(eps_values: Iterable[float] = EPS_TABLE,
                      h_values: Iterable[float] = H_TABLE, *,
                      tau: float = 5e-6, t_final: float = 1.0,
                      lam: float = 1.0, initial_data: str = "gaussian",
                      store_dir=None, threads: int = 1,
                      reference: ReferenceProvider | None = None
                      ) -> ConvergenceReport:
    """Halve h at fixed tiny tau; errors vs the stored fine reference."""
    h_values = tuple(h_values)
    ref_label = "custom provider"
    if reference is None:
        reference = lambda eps: reference_solution(eps, store_dir)
        ref_label = "mti-fp N=1024 tau=5e-06 T=1.0"
    metadata = _metadata("spatial", initial_data, lam, t_final,
                         fixed=("tau", tau), ref_label=ref_label)
    cfg = lambda eps, h: _solver_config(eps, tau, _n_for_h(h), t_final, lam,
                                        initial_data)
    return _run_sweep("spatial", eps_values, h_values, cfg,
                      reference=reference, threads=threads, metadata=metadata)


def run_temporal_sweep(eps_values: Iterable[float] = EPS_TABLE,
                       tau_values: Iterable[float] = TAU_TABLE, *,
                       h: float = 0.125, t_final: float = 1.0,
                       lam: float = 1.0, initial_data: str = "gaussian",
                       store_dir=None, threads: int = 1,
                       reference: ReferenceProvider | None = None
                       ) -> ConvergenceReport:
    """Quarter tau at fixed h; errors vs the stored fine reference."""
    tau_values = tuple(tau_values)
    ref_label = "custom provider"
    if reference is None:
        reference = lambda eps: reference_solution(eps, store_dir)
        ref_label = "mti-fp N=1024 tau=5e-06 T=1.0"
    n = _n_for_h(h)
    metadata = _metadata("temporal", initial_data, lam, t_final,
                         fixed=("h", h), ref_label=ref_label)
    cfg = lambda eps, tau: _solver_config(eps, tau, n, t_final, lam,
                                          initial_data)
    return _run_sweep("temporal", eps_values, tau_values, cfg,
                      reference=reference, threads=threads, metadata=metadata)


def _metadata(axis, initial_data, lam, t_final, fixed, ref_label):
    return (
        ("axis", axis),
        ("scenario", f"initial_data={initial_data} lam={lam!r} "
                     f"t_final={t_final!r}"),
        ("domain", f"{DOMAIN[0]!r}..{DOMAIN[1]!r}"),
        (f"fixed_{fixed[0]}", repr(fixed[1])),
        ("reference", ref_label),
        ("norm", "H2 on run grid, sqrt(b-a) scaled"),
        ("mtifp_version", __version__),
    )


# ---------------------------------------------------------------------------
# CSV contract
# ---------------------------------------------------------------------------

def render_report(report: ConvergenceReport) -> str:
    """Deterministic CSV text; identical reports give identical bytes."""
    lines = [_CSV_HEADER]
    for key, value in report.metadata:
        lines.append(f"# {key},{value}")
    for eps, res, message in report.failures:
        lines.append(f"# failed,{eps!r} {res!r} {message}")
    lines.append("eps,resolution,error,rate")

    def fmt(x):
        return "" if x is None else repr(float(x))

    def emit_row(label, errors, rates):
        for j, res in enumerate(report.resolutions):
            rate = None if j == 0 else rates[j - 1]
            err = errors[j]
            lines.append(f"{label},{res!r},"
                         f"{'nan' if err is None else repr(float(err))},"
                         f"{fmt(rate)}")

    for row in report.rows:
        emit_row(repr(row.eps), row.errors, row.rates)
    if report.uniform_row is not None:
        emit_row(_UNIFORM_LABEL, report.uniform_row, report.uniform_rates)
    return "\n".join(lines) + "\n"


def write_report(report: ConvergenceReport, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_report(report))
    return path


def parse_report(text: str) -> ConvergenceReport:
    """Inverse of render_report (metadata, rows, uniform row, rates)."""
    lines = text.splitlines()
    if not lines or lines[0] != _CSV_HEADER:
        raise ValueError("not a mti-fp report: missing header line")
    metadata = []
    failures = []
    body_at = None
    for i, line in enumerate(lines[1:], start=1):
        if line.startswith("# failed,"):
            rest = line[len("# failed,"):]
            eps_s, res_s, message = rest.split(" ", 2)
            failures.append((float(eps_s), float(res_s), message))
        elif line.startswith("# "):
            key, _, value = line[2:].partition(",")
            metadata.append((key, value))
        else:
            body_at = i
            break
    if body_at is None or lines[body_at] != "eps,resolution,error,rate":
        raise ValueError("malformed report: missing column header")
    cells: dict = {}
    order: list = []
    resolutions: list = []
    for line in lines[body_at + 1:]:
        if not line:
            continue
        label, res_s, err_s, _rate_s = line.split(",")
        res = float(res_s)
        if res not in resolutions:
            resolutions.append(res)
        err = None if err_s == "nan" else float(err_s)
        key = label if label == _UNIFORM_LABEL else float(label)
        if key not in order:
            order.append(key)
        cells[(key, res)] = err
    axis = dict(metadata).get("axis", "temporal")
    eps_values = [k for k in order if k != _UNIFORM_LABEL]
    report = _assemble(axis, resolutions, eps_values, cells, failures,
                       metadata)
    return report


# ---------------------------------------------------------------------------
# Traces
# ---------------------------------------------------------------------------

_PLOT_SCRIPT = """\
#!/usr/bin/env python3
# Plot the trace CSVs sitting next to this script.
import csv
import glob
import os
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
files = sorted(glob.glob(os.path.join(here, "trace_eps*.csv")))
fig, axes = plt.subplots(len(files), 1, sharex=True, squeeze=False)
for ax, name in zip(axes[:, 0], files):
    with open(name) as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    head, data = rows[0], rows[1:]
    t = [float(r[0]) for r in data]
    re = [float(r[1]) for r in data]
    ax.plot(t, re, lw=0.8)
    ax.set_ylabel(os.path.basename(name)[len("trace_eps"):-len(".csv")])
axes[-1, 0].set_xlabel("t")
fig.suptitle("u(0, t), real part")
plt.savefig(os.path.join(here, "traces.png"), dpi=150)
print("wrote traces.png")
"""


def emit_traces(eps_values: Iterable[float], out_dir, *, tau: float = 1e-3,
                t_final: float = 1.0, n: int = 128, lam: float = 1.0,
                initial_data: str = "gaussian-real",
                snapshots: int = 0) -> list[Path]:
    """u(x=0, t) sampled every step per eps, written as CSV plus a plotting
    script; optional evenly spaced space-time snapshots."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for eps in eps_values:
        cfg = _solver_config(eps, tau, n, t_final, lam, initial_data)
        mid = n // 2  # x = 0 for the symmetric domain
        times, values = [], []
        snaps = []
        n_steps = cfg.n_steps
        snap_every = max(1, n_steps // snapshots) if snapshots else 0

        def observe(k, t, state):
            u = from_spectral(state.u)
            times.append(t)
            values.append(u[mid])
            if snap_every and k % snap_every == 0:
                snaps.append((t, u.copy()))

        propagate(cfg, observers=[observe])
        path = out / f"trace_eps{float(eps)!r}.csv"
        lines = ["# mti-fp trace v1", f"# eps,{float(eps)!r}",
                 f"# tau,{float(tau)!r}", "t,re_u,im_u"]
        for t, v in zip(times, values):
            lines.append(f"{float(t)!r},{float(v.real)!r},"
                         f"{float(v.imag)!r}")
        path.write_text("\n".join(lines) + "\n")
        paths.append(path)
        if snaps:
            spath = out / f"snapshots_eps{float(eps)!r}.csv"
            grid = cfg.grid()
            slines = ["# mti-fp snapshots v1", "t,x,re_u,im_u"]
            for t, u in snaps:
                for x, v in zip(grid.x, u):
                    slines.append(f"{float(t)!r},{float(x)!r},"
                                  f"{float(v.real)!r},{float(v.imag)!r}")
            spath.write_text("\n".join(slines) + "\n")
            paths.append(spath)
    script = out / "plot_traces.py"
    script.write_text(_PLOT_SCRIPT)
    paths.append(script)
    return paths


def dominant_period(times: Sequence[float], values: Sequence[float]) -> float:
    """Period estimate from sign changes: two crossings per cycle."""
    v = np.asarray(values, dtype=float)
    t = np.asarray(times, dtype=float)
    signs = np.sign(v)
    signs = signs[signs != 0]
    crossings = int(np.count_nonzero(np.diff(signs)))
    if crossings == 0:
        raise ValueError("no zero crossings; cannot estimate a period")
    return 2.0 * (t[-1] - t[0]) / crossings


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

class ConfigError(ValueError):
    """Configuration problem, annotated with the offending key path."""


@dataclass(frozen=True)
class SweepSpec:
    axis: str                 # "spatial" | "temporal"
    eps_values: tuple
    resolutions: tuple        # h values or tau values
    fixed: float              # tau for spatial, h for temporal
    t_final: float = 1.0
    lam: float = 1.0
    initial_data: str = "gaussian"


@dataclass(frozen=True)
class LoadedConfig:
    solver: SolverConfig
    sweep: SweepSpec | None
    out: Path | None
    threads: int


PRESETS: dict[str, SweepSpec] = {
    "table1": SweepSpec(axis="spatial", eps_values=EPS_TABLE,
                        resolutions=H_TABLE, fixed=5e-6),
    "table1-lite": SweepSpec(axis="spatial",
                             eps_values=(0.5, 0.5 / 2**9),
                             resolutions=H_TABLE, fixed=1e-5),
    "table2": SweepSpec(axis="temporal", eps_values=EPS_TABLE,
                        resolutions=TAU_TABLE, fixed=0.125),
    "table2-lite": SweepSpec(axis="temporal",
                             eps_values=(0.5, 0.5 / 2**3, 0.5 / 2**5,
                                         0.5 / 2**13),
                             resolutions=TAU_TABLE[:5], fixed=0.125),
}

_SOLVER_KEYS = {"eps", "tau", "grid_n", "t_final", "lambda", "initial_data",
                "phi2_convention", "filter", "real_fast_path", "dealias",
                "domain"}
_SWEEP_KEYS = {"axis", "eps", "h_values", "tau_values", "tau", "h",
               "t_final", "lambda", "initial_data"}
_TOP_KEYS = {"preset", "solver", "sweep", "out", "threads"}


def _require_mapping(value, path):
    if not isinstance(value, dict):
        raise ConfigError(f"{path}: expected a mapping, got "
                          f"{type(value).__name__}")
    return value


def _reject_unknown(mapping, allowed, path):
    unknown = sorted(set(mapping) - allowed)
    if unknown:
        raise ConfigError(f"{path}: unknown key(s) {', '.join(unknown)}; "
                          f"allowed: {', '.join(sorted(allowed))}")


def _number(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    return float(value)


def _number_list(value, path):
    if not isinstance(value, (list, tuple)) or not value:
        raise ConfigError(f"{path}: expected a non-empty list of numbers")
    return tuple(_number(v, f"{path}[{i}]") for i, v in enumerate(value))


def _solver_from_mapping(section, path) -> SolverConfig:
    _reject_unknown(section, _SOLVER_KEYS, path)
    kwargs = {}
    if "domain" in section:
        dom = _number_list(section["domain"], f"{path}.domain")
        if len(dom) != 2:
            raise ConfigError(f"{path}.domain: expected [a, b]")
        kwargs["a"], kwargs["b"] = dom
    for src, dst in (("eps", "eps"), ("tau", "tau"), ("t_final", "t_final"),
                     ("lambda", "lam")):
        if src in section:
            kwargs[dst] = _number(section[src], f"{path}.{src}")
    if "grid_n" in section:
        n = section["grid_n"]
        if isinstance(n, bool) or not isinstance(n, int):
            raise ConfigError(f"{path}.grid_n: expected an integer")
        kwargs["n"] = n
    for src, dst in (("initial_data", "initial_data"),
                     ("phi2_convention", "phi2_convention"),
                     ("filter", "filter_kind")):
        if src in section:
            value = section[src]
            if not isinstance(value, str):
                raise ConfigError(f"{path}.{src}: expected a string")
            kwargs[dst] = value
    for src, dst in (("real_fast_path", "real_fast_path"),
                     ("dealias", "dealias")):
        if src in section:
            value = section[src]
            if not isinstance(value, bool):
                raise ConfigError(f"{path}.{src}: expected true/false")
            kwargs[dst] = value
    try:
        return SolverConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _sweep_from_mapping(section, path, base: SweepSpec | None) -> SweepSpec:
    _reject_unknown(section, _SWEEP_KEYS, path)
    if base is None:
        if "axis" not in section:
            raise ConfigError(f"{path}.axis: required without a preset")
        axis = section["axis"]
    else:
        axis = section.get("axis", base.axis)
    if axis not in ("spatial", "temporal"):
        raise ConfigError(f"{path}.axis: expected spatial or temporal, "
                          f"got {axis!r}")
    res_key = "h_values" if axis == "spatial" else "tau_values"
    wrong = "tau_values" if axis == "spatial" else "h_values"
    if wrong in section:
        raise ConfigError(f"{path}.{wrong}: not valid on the {axis} axis")
    fixed_key = "tau" if axis == "spatial" else "h"
    wrong_fixed = "h" if axis == "spatial" else "tau"
    if wrong_fixed in section:
        raise ConfigError(f"{path}.{wrong_fixed}: not valid on the {axis} "
                          f"axis")
    spec = base if base is not None and base.axis == axis else None
    eps_values = (_number_list(section["eps"], f"{path}.eps")
                  if "eps" in section
                  else (spec.eps_values if spec else EPS_TABLE))
    resolutions = (_number_list(section[res_key], f"{path}.{res_key}")
                   if res_key in section
                   else (spec.resolutions if spec
                         else (H_TABLE if axis == "spatial" else TAU_TABLE)))
    default_fixed = spec.fixed if spec else (5e-6 if axis == "spatial"
                                             else 0.125)
    fixed = (_number(section[fixed_key], f"{path}.{fixed_key}")
             if fixed_key in section else default_fixed)
    t_final = (_number(section["t_final"], f"{path}.t_final")
               if "t_final" in section else (spec.t_final if spec else 1.0))
    lam = (_number(section["lambda"], f"{path}.lambda")
           if "lambda" in section else (spec.lam if spec else 1.0))
    initial_data = section.get("initial_data",
                               spec.initial_data if spec else "gaussian")
    out = SweepSpec(axis=axis, eps_values=eps_values, resolutions=resolutions,
                    fixed=fixed, t_final=t_final, lam=lam,
                    initial_data=initial_data)
    _validate_sweep(out, path)
    return out


def _validate_sweep(spec: SweepSpec, path: str) -> None:
    for i, eps in enumerate(spec.eps_values):
        if not 0.0 < eps <= 1.0:
            raise ConfigError(f"{path}.eps[{i}]: must lie in (0, 1], "
                              f"got {eps}")
    for i, res in enumerate(spec.resolutions):
        if res <= 0:
            raise ConfigError(f"{path}: resolution[{i}] must be positive")
    if spec.axis == "spatial":
        ratio = spec.t_final / spec.fixed
        if abs(ratio - round(ratio)) * spec.fixed > 1e-9 * spec.fixed:
            raise ConfigError(f"{path}.tau: {spec.fixed} does not divide "
                              f"t_final = {spec.t_final}")
        for i, h in enumerate(spec.resolutions):
            try:
                _n_for_h(h)
            except ValueError as exc:
                raise ConfigError(f"{path}.h_values[{i}]: {exc}") from None
    else:
        try:
            _n_for_h(spec.fixed)
        except ValueError as exc:
            raise ConfigError(f"{path}.h: {exc}") from None
        for i, tau in enumerate(spec.resolutions):
            ratio = spec.t_final / tau
            if abs(ratio - round(ratio)) * tau > 1e-9 * tau:
                raise ConfigError(f"{path}.tau_values[{i}]: {tau} does not "
                                  f"divide t_final = {spec.t_final}")


def load_config(path) -> LoadedConfig:
    """Strict structured-text config: unknown keys rejected with key paths;
    a preset names a full sweep spec that explicit keys then override."""
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if raw is None:
        raw = {}
    raw = _require_mapping(raw, str(path))
    _reject_unknown(raw, _TOP_KEYS, str(path))
    base = None
    if "preset" in raw:
        name = raw["preset"]
        if name not in PRESETS:
            raise ConfigError(f"preset: unknown preset {name!r}; available: "
                              f"{', '.join(sorted(PRESETS))}")
        base = PRESETS[name]
    solver = SolverConfig()
    if "solver" in raw:
        solver = _solver_from_mapping(
            _require_mapping(raw["solver"], "solver"), "solver")
    sweep = base
    if "sweep" in raw:
        sweep = _sweep_from_mapping(
            _require_mapping(raw["sweep"], "sweep"), "sweep", base)
    out = Path(raw["out"]) if "out" in raw else None
    threads = raw.get("threads", 1)
    if isinstance(threads, bool) or not isinstance(threads, int) \
            or threads < 1:
        raise ConfigError("threads: expected a positive integer")
    return LoadedConfig(solver=solver, sweep=sweep, out=out, threads=threads)


def run_sweep_spec(spec: SweepSpec, *, store_dir=None, threads: int = 1,
                   reference: ReferenceProvider | None = None
                   ) -> ConvergenceReport:
    """Dispatch a loaded sweep spec to the matching sweep runner."""
    common = dict(t_final=spec.t_final, lam=spec.lam,
                  initial_data=spec.initial_data, store_dir=store_dir,
                  threads=threads, reference=reference)
    if spec.axis == "spatial":
        return run_spatial_sweep(spec.eps_values, spec.resolutions,
                                 tau=spec.fixed, **common)
    return run_temporal_sweep(spec.eps_values, spec.resolutions,
                              h=spec.fixed, **common)
