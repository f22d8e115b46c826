"""Multiscale time integrator Fourier pseudospectral solver for the
Klein-Gordon equation eps^2 u_tt - u_xx + u/eps^2 + lambda |u|^2 u = 0
on a periodic interval, uniformly accurate for 0 < eps <= 1."""

__version__ = "0.1.0"

from .spectral import (
    FieldHat,
    SpectralGrid,
    conj_field,
    from_spectral,
    make_grid,
    resample,
    sample,
    sobolev_norm,
    spectral_derivative,
    to_spectral,
)
from .coefficients import (
    ab_coefficients,
    build_step_coefficients,
    forcing_coefficients,
    mode_frequencies,
    quadrature_reference,
)
from .mdf import DecompositionState, decompose, reconstruct, velocity_filter
from .solver import (
    DivergenceError,
    SolverConfig,
    SolverState,
    TabulatedData,
    energy,
    init,
    propagate,
    step,
)
from .oracle import (
    OracleBudgetError,
    OracleConfig,
    ReferenceSolution,
    mode_ode_solve,
    reference_solution,
)
from .harness import (
    ConvergenceReport,
    ConfigError,
    EPS_TABLE,
    dominant_period,
    emit_traces,
    error_norm,
    load_config,
    parse_report,
    render_report,
    run_spatial_sweep,
    run_temporal_sweep,
    write_report,
)

__all__ = [
    "ConfigError",
    "ConvergenceReport",
    "DecompositionState",
    "DivergenceError",
    "EPS_TABLE",
    "FieldHat",
    "OracleBudgetError",
    "OracleConfig",
    "ReferenceSolution",
    "SolverConfig",
    "SolverState",
    "SpectralGrid",
    "TabulatedData",
    "__version__",
    "ab_coefficients",
    "build_step_coefficients",
    "conj_field",
    "decompose",
    "dominant_period",
    "emit_traces",
    "energy",
    "error_norm",
    "forcing_coefficients",
    "from_spectral",
    "init",
    "load_config",
    "make_grid",
    "mode_frequencies",
    "mode_ode_solve",
    "parse_report",
    "propagate",
    "quadrature_reference",
    "reconstruct",
    "reference_solution",
    "render_report",
    "resample",
    "sample",
    "run_spatial_sweep",
    "run_temporal_sweep",
    "sobolev_norm",
    "spectral_derivative",
    "step",
    "to_spectral",
    "velocity_filter",
    "write_report",
]
