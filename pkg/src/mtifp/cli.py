"""Command line front end.

Subcommands map onto the library surface: ``solve`` runs one propagation,
``sweep-spatial``/``sweep-temporal`` produce refinement error tables,
``traces`` writes point time series, ``make-reference`` fills the reference
store, and ``check-coeffs`` compares the tabulated step coefficients against
the quadrature route.  Everything a flag does not cover lives in the config
file (``--config``).
"""

from __future__ import annotations

import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import click
import numpy as np

from . import __version__
from ._kernels import active_backend_name
from .coefficients import (
    ab_coefficients,
    forcing_coefficients,
    quadrature_reference,
)
from .harness import (
    DOMAIN,
    EPS_TABLE,
    PRESETS,
    ConfigError,
    ConvergenceReport,
    LoadedConfig,
    SweepSpec,
    emit_traces,
    load_config,
    render_report,
    run_sweep_spec,
    write_report,
)
from .oracle import reference_dir, reference_path, reference_solution
from .solver import SolverConfig, energy, from_spectral, init, propagate
from .spectral import make_grid, sobolev_norm


def _load(config_path) -> LoadedConfig:
    if config_path is None:
        return LoadedConfig(solver=SolverConfig(), sweep=None, out=None,
                            threads=1)
    try:
        return load_config(config_path)
    except ConfigError as exc:
        raise click.ClickException(str(exc)) from None


def _apply_solver_flags(cfg: SolverConfig, **flags) -> SolverConfig:
    given = {k: v for k, v in flags.items() if v is not None}
    if "grid_n" in given:
        given["n"] = given.pop("grid_n")
    try:
        return replace(cfg, **given) if given else cfg
    except ValueError as exc:
        raise click.ClickException(str(exc)) from None


@click.group()
@click.version_option(__version__, prog_name="mtifp")
def main() -> None:
    """Multiscale time integrator for the relativistic-scaling wave model."""


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------

@main.command()
@click.option("--config", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Config file; flags override it.")
@click.option("--eps", type=float, default=None, help="Scale parameter.")
@click.option("--tau", type=float, default=None, help="Time step.")
@click.option("--grid-n", type=int, default=None, help="Grid points.")
@click.option("--t-final", type=float, default=None, help="Final time.")
@click.option("--lambda", "lam", type=float, default=None,
              help="Cubic coupling (negative = defocusing).")
@click.option("--out", type=click.Path(file_okay=False), default=None,
              help="Directory for the final-state CSV.")
def solve(config, eps, tau, grid_n, t_final, lam, out) -> None:
    """Propagate one scenario and report final norms and energy drift."""
    cfg = _apply_solver_flags(_load(config).solver, eps=eps, tau=tau,
                              grid_n=grid_n, t_final=t_final, lam=lam)
    state0 = init(cfg)
    e0 = energy(state0, cfg)
    state = propagate(cfg)
    e1 = energy(state, cfg)
    drift = abs(e1 - e0) / abs(e0) if e0 != 0 else 0.0
    click.echo(f"backend: {active_backend_name()}")
    click.echo(f"steps: {cfg.n_steps}  (eps={cfg.eps!r} tau={cfg.tau!r} "
               f"T={cfg.t_final!r} N={cfg.n} lambda={cfg.lam!r})")
    click.echo(f"final |u|_H2 = {sobolev_norm(state.u, order=2):.12e}")
    click.echo(f"energy = {e1:.12e}  relative drift = {drift:.3e}")
    if out is not None:
        path = Path(out)
        path.mkdir(parents=True, exist_ok=True)
        u = from_spectral(state.u)
        ud = from_spectral(state.u_dot)
        lines = ["# mti-fp solution v1",
                 f"# eps,{cfg.eps!r}", f"# tau,{cfg.tau!r}",
                 f"# t_final,{cfg.t_final!r}", "x,re_u,im_u,re_ut,im_ut"]
        for x, a, b in zip(cfg.grid().x, u, ud):
            lines.append(f"{float(x)!r},{float(a.real)!r},{float(a.imag)!r},"
                         f"{float(b.real)!r},{float(b.imag)!r}")
        target = path / "solution.csv"
        target.write_text("\n".join(lines) + "\n")
        click.echo(f"wrote {target}")


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

def _sweep_spec(config, preset, axis, eps, fixed) -> tuple[SweepSpec, LoadedConfig]:
    loaded = _load(config)
    spec = loaded.sweep
    if preset is not None:
        if preset not in PRESETS:
            raise click.ClickException(
                f"unknown preset {preset!r}; available: "
                f"{', '.join(sorted(PRESETS))}")
        spec = PRESETS[preset]
    if spec is None:
        spec = PRESETS["table1" if axis == "spatial" else "table2"]
    if spec.axis != axis:
        raise click.ClickException(
            f"configured sweep is {spec.axis}, but this command runs the "
            f"{axis} axis")
    changes = {}
    if eps:
        changes["eps_values"] = tuple(eps)
    if fixed is not None:
        changes["fixed"] = fixed
    if changes:
        spec = replace(spec, **changes)
    return spec, loaded


def _emit_sweep(report: ConvergenceReport, out, preset, loaded) -> None:
    click.echo(_format_table(report))
    target_dir = Path(out) if out is not None else loaded.out
    if target_dir is not None:
        target_dir = Path(target_dir)
        name = f"{preset or report.axis}.csv"
        path = write_report(report, target_dir / name)
        click.echo(f"wrote {path}")


def _format_table(report: ConvergenceReport) -> str:
    head = "eps".ljust(12) + "".join(
        f"{res:>12.4e}" for res in report.resolutions)
    lines = [f"axis: {report.axis}", head]

    def cell(err, rate):
        txt = "  failed" if err is None else f"{err:9.2e}"
        if rate is not None:
            txt += f"({rate:4.1f})" if abs(rate) < 100 else "(  --)"
        return txt.rjust(12)

    def fmt_row(label, errors, rates):
        cells = [cell(errors[0], None)]
        cells += [cell(e, r) for e, r in zip(errors[1:], rates)]
        return label.ljust(12) + "".join(cells)

    for row in report.rows:
        lines.append(fmt_row(f"{row.eps:.6g}", row.errors, row.rates))
    if report.uniform_row is not None:
        lines.append(fmt_row("uniform", report.uniform_row,
                             report.uniform_rates))
    for eps, res, message in report.failures:
        lines.append(f"failed: eps={eps!r} resolution={res!r}: {message}")
    return "\n".join(lines)


@main.command("sweep-spatial")
@click.option("--config", type=click.Path(exists=True, dir_okay=False),
              default=None)
@click.option("--preset", type=str, default=None,
              help="table1 or table1-lite.")
@click.option("--eps", type=float, multiple=True,
              help="Override the eps row set.")
@click.option("--tau", type=float, default=None, help="Fixed time step.")
@click.option("--out", type=click.Path(file_okay=False), default=None,
              help="Directory for the report CSV.")
@click.option("--threads", type=int, default=None)
def sweep_spatial(config, preset, eps, tau, out, threads) -> None:
    """Halve h at fixed tiny tau and tabulate errors against the stored
    reference (generated on demand; see make-reference)."""
    spec, loaded = _sweep_spec(config, preset, "spatial", eps, tau)
    report = run_sweep_spec(spec, threads=threads or loaded.threads)
    _emit_sweep(report, out, preset, loaded)


@main.command("sweep-temporal")
@click.option("--config", type=click.Path(exists=True, dir_okay=False),
              default=None)
@click.option("--preset", type=str, default=None,
              help="table2 or table2-lite.")
@click.option("--eps", type=float, multiple=True,
              help="Override the eps row set.")
@click.option("--grid-n", type=int, default=None,
              help="Fixed spatial resolution (grid points).")
@click.option("--out", type=click.Path(file_okay=False), default=None,
              help="Directory for the report CSV.")
@click.option("--threads", type=int, default=None)
def sweep_temporal(config, preset, eps, grid_n, out, threads) -> None:
    """Quarter tau at fixed h and tabulate errors against the stored
    reference (generated on demand; see make-reference)."""
    h = None if grid_n is None else (DOMAIN[1] - DOMAIN[0]) / grid_n
    spec, loaded = _sweep_spec(config, preset, "temporal", eps, h)
    report = run_sweep_spec(spec, threads=threads or loaded.threads)
    _emit_sweep(report, out, preset, loaded)


# ---------------------------------------------------------------------------
# traces
# ---------------------------------------------------------------------------

@main.command()
@click.option("--eps", type=float, multiple=True, default=(1.0, 0.25),
              show_default=True)
@click.option("--tau", type=float, default=1e-3, show_default=True)
@click.option("--t-final", type=float, default=1.0, show_default=True)
@click.option("--grid-n", type=int, default=128, show_default=True)
@click.option("--lambda", "lam", type=float, default=1.0, show_default=True)
@click.option("--snapshots", type=int, default=0, show_default=True,
              help="Also write this many space-time snapshots per eps.")
@click.option("--out", type=click.Path(file_okay=False), default="traces",
              show_default=True)
def traces(eps, tau, t_final, grid_n, lam, snapshots, out) -> None:
    """Write u(x=0, t) time series for the real-data scenario, one CSV per
    eps, plus a plotting script."""
    try:
        paths = emit_traces(eps, out, tau=tau, t_final=t_final, n=grid_n,
                            lam=lam, initial_data="gaussian-real",
                            snapshots=snapshots)
    except ValueError as exc:
        raise click.ClickException(str(exc)) from None
    for path in paths:
        click.echo(f"wrote {path}")


# ---------------------------------------------------------------------------
# reference store
# ---------------------------------------------------------------------------

@main.command("make-reference")
@click.option("--eps", type=float, multiple=True,
              help="Scale parameters to cover (default: the full table set).")
@click.option("--out", type=click.Path(file_okay=False), default=None,
              help="Reference store directory (default: MTIFP_REF_DIR or "
                   "./mtifp_references).")
@click.option("--threads", type=int, default=1, show_default=True)
def make_reference(eps, out, threads) -> None:
    """Generate (or reuse) the fine-grid reference solutions used by the
    sweeps.  Safe to re-run: existing entries are kept."""
    eps_values = tuple(eps) if eps else EPS_TABLE
    store = reference_dir(out)
    existing = {e: reference_path(e, store).exists() for e in eps_values}

    def build(e):
        ref = reference_solution(e, store)
        return e, ref.path

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        for e, path in pool.map(build, eps_values):
            state = "cached" if existing[e] else "generated"
            click.echo(f"eps={e!r}: {state} {path}")


# ---------------------------------------------------------------------------
# coefficient check
# ---------------------------------------------------------------------------

_CHECK_EPS = (1.0, 0.5, 0.1, 0.01, 1e-4)
_CHECK_TAU = (0.2, 1e-2, 1e-4)


def _check_mus(eps: float, n: int) -> np.ndarray:
    """Grid frequencies plus the resonant point (s = 3) and its 1e-4
    relative neighborhood; mu = 0 is already on the grid."""
    grid = make_grid(DOMAIN[0], DOMAIN[1], n)
    mus = np.unique(np.abs(grid.mu))
    res = np.sqrt(8.0) / eps
    extra = np.array([res * (1.0 - 1e-4), res, res * (1.0 + 1e-4)])
    return np.concatenate([mus, extra])


def _check_cell(eps: float, tau: float, n: int) -> tuple[float, str]:
    """Worst tolerance margin over every coefficient at one (eps, tau);
    margin <= 1 passes: |dev| <= max(1e-10 |ref|, 1e-14) + oracle bound."""
    mus = _check_mus(eps, n)
    ab = ab_coefficients(mus, eps, tau)
    fc = forcing_coefficients(mus, eps, tau)
    worst, worst_at = 0.0, ""

    def record(margin, label):
        nonlocal worst, worst_at
        if margin > worst:
            worst, worst_at = margin, label

    impl = {"c": fc.c, "d": fc.d, "c_dot": fc.c_dot, "d_dot": fc.d_dot,
            "p": fc.p, "q": fc.q, "p_dot": fc.p_dot, "q_dot": fc.q_dot}
    for kind in ("c", "d", "c_dot", "d_dot", "p", "q", "p_dot", "q_dot"):
        for i, mu in enumerate(mus):
            ref, bound = quadrature_reference(mu, eps, tau, kind,
                                              with_error=True)
            tol = max(1e-10 * abs(ref), 1e-14) + bound
            record(abs(impl[kind][i] - ref) / tol, f"{kind} mu={mu:.6g}")
            # c_dot doubles as the independent route to b (they coincide);
            # a and b' are covered by the exact linear relations below.
            if kind == "c_dot":
                record(abs(ab.b[i] - ref) / tol, f"b mu={mu:.6g}")
    # Propagator internal consistency: the Wronskian a(eps^2 b') - (eps^2 b) a'
    # is mu-independent of modulus 1, and a - eps^2 b' = 2i b.
    wr = ab.a * (eps**2 * ab.b_dot) - (eps**2 * ab.b) * ab.a_dot
    record(float(np.max(np.abs(np.abs(wr) - 1.0))) / 1e-12, "wronskian |.|")
    record(float(np.max(np.abs(wr - wr[0]))) / 1e-12, "wronskian flat")
    record(float(np.max(np.abs(ab.a - eps**2 * ab.b_dot - 2j * ab.b))) / 1e-12,
           "a - eps^2 b' - 2ib")
    return worst, worst_at


@main.command("check-coeffs")
@click.option("--eps", type=float, multiple=True, default=_CHECK_EPS,
              show_default=True)
@click.option("--tau", type=float, multiple=True, default=_CHECK_TAU,
              show_default=True)
@click.option("--grid-n", type=int, default=64, show_default=True)
def check_coeffs(eps, tau, grid_n) -> None:
    """Compare every step coefficient against direct quadrature of its
    defining integral; exit nonzero if any deviation exceeds tolerance."""
    failed = False
    for e in eps:
        for t in tau:
            margin, at = _check_cell(e, t, grid_n)
            ok = margin <= 1.0
            failed = failed or not ok
            click.echo(f"eps={e!r} tau={t!r}: worst margin {margin:.3f} "
                       f"({at})  {'PASS' if ok else 'FAIL'}")
    click.echo("coefficient check: " + ("PASS" if not failed else "FAIL"))
    if failed:
        sys.exit(1)
