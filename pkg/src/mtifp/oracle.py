"""Independent reference solutions.

Two unrelated routes to a trusted answer:

* ``mode_ode_solve`` integrates the coupled Fourier-mode system
  ``u_l'' = -omega_l^2 u_l - fhat_l / eps^2`` with a high-order adaptive
  pair, evaluating the nonlinearity pseudospectrally inside the right-hand
  side.  It shares no code path with the stepper, so agreement is evidence,
  not self-consistency.  Stiffness grows like 1/eps^2: intended for
  eps >= 0.05 and N <= 256.

* ``reference_solution`` runs the stepper itself at the fine study
  resolution (N = 1024 on [-16, 16], tau = 5e-6, T = 1) and persists the
  result to a content-hashed binary container so every later error sweep
  reuses it bit-identically.
"""

from __future__ import annotations

import hashlib
import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp

from .solver import SolverConfig, SolverState, init as solver_init, propagate
from .spectral import FieldHat, SpectralGrid, make_grid

_REF_DIR_ENV = "MTIFP_REF_DIR"
_REF_TAU = 5e-6
_REF_N = 1024
_REF_DOMAIN = (-16.0, 16.0)
_MAGIC = b"MTIFPREF"
_VERSION = 1
# DFT convention stamp: forward transform carries 1/N, logical mode order
# runs -N/2 .. N/2-1; a mismatch refuses to load rather than silently flip
_DFT_TAG = b"fwd1/N;l=-N/2:N/2"
_HEADER = struct.Struct("<8sI32sIddddd")  # magic, version, tag, n, a, b, eps, tau, T


class OracleBudgetError(RuntimeError):
    """The adaptive integrator exceeded its evaluation budget (typical for
    tiny eps, where the mode system is out of oracle scope by design)."""


@dataclass(frozen=True)
class OracleConfig:
    a: float = -16.0
    b: float = 16.0
    n: int = 128
    eps: float = 0.5
    t_final: float = 1.0
    lam: float = 1.0
    rtol: float = 1e-11
    atol: float = 1e-13
    max_rhs_evals: int = 5_000_000

    def __post_init__(self):
        for name, value in (("rtol", self.rtol), ("atol", self.atol)):
            if not 1e-13 <= value <= 1e-6:
                raise ValueError(
                    f"{name} must lie in [1e-13, 1e-6], got {value}")
        if not 0.0 < self.eps <= 1.0:
            raise ValueError(f"eps must lie in (0, 1], got {self.eps}")
        if self.t_final <= 0:
            raise ValueError(f"t_final must be positive, got {self.t_final}")

    def grid(self) -> SpectralGrid:
        return make_grid(self.a, self.b, self.n)


def mode_ode_solve(config: OracleConfig, u0: FieldHat,
                   u0_dot: FieldHat) -> SolverState:
    """Adaptive integration of the mode system to t_final.

    The returned state's step_index carries the integrator's right-hand-side
    evaluation count (its only available effort measure).
    """
    grid = config.grid()
    if u0.grid != grid or u0_dot.grid != grid:
        raise ValueError("initial data grid does not match oracle grid")
    n = grid.n
    eps_sq = config.eps * config.eps
    omega_sq = (1.0 + grid.mu_sq * eps_sq) / (eps_sq * eps_sq)
    lam = config.lam
    # nodal <-> spectral bridges in logical mode order, mirroring to_spectral
    shift = np.fft.ifftshift
    unshift = np.fft.fftshift
    budget = config.max_rhs_evals
    n_evals = 0

    def rhs(_t, y):
        nonlocal n_evals
        n_evals += 1
        if n_evals > budget:
            raise OracleBudgetError(
                f"mode-ODE oracle exceeded {budget} right-hand-side "
                f"evaluations (eps = {config.eps})")
        u_hat = y[:n]
        out = np.empty_like(y)
        out[:n] = y[n:]
        if lam == 0.0:
            f_hat = 0.0
        else:
            u = np.fft.ifft(shift(u_hat)) * n
            f = lam * (u.real * u.real + u.imag * u.imag) * u
            f_hat = unshift(np.fft.fft(f)) / n
        out[n:] = -omega_sq * u_hat - f_hat / eps_sq
        return out

    y0 = np.concatenate([u0.coeffs, u0_dot.coeffs])
    sol = solve_ivp(rhs, (0.0, config.t_final), y0, method="DOP853",
                    rtol=config.rtol, atol=config.atol,
                    t_eval=[config.t_final], dense_output=False)
    if not sol.success:
        raise RuntimeError(f"mode-ODE oracle failed: {sol.message}")
    y = sol.y[:, -1]
    return SolverState(u=FieldHat(grid, np.ascontiguousarray(y[:n])),
                       u_dot=FieldHat(grid, np.ascontiguousarray(y[n:])),
                       step_index=n_evals, time=config.t_final)


# ---------------------------------------------------------------------------
# Reference store
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReferenceSolution:
    u: FieldHat
    u_dot: FieldHat
    eps: float
    tau_ref: float
    t_final: float
    path: Path


def reference_dir(explicit: str | os.PathLike | None = None) -> Path:
    """Store directory: explicit argument, else $MTIFP_REF_DIR, else
    ./mtifp_references."""
    if explicit is not None:
        return Path(explicit)
    env = os.environ.get(_REF_DIR_ENV)
    return Path(env) if env else Path("mtifp_references")


def reference_path(eps: float, store_dir: str | os.PathLike | None = None,
                   n: int = _REF_N) -> Path:
    return reference_dir(store_dir) / f"ref_eps{float(eps)!r}_N{n}.bin"


def _pack(grid: SpectralGrid, eps: float, tau_ref: float, t_final: float,
          u_hat: np.ndarray, ud_hat: np.ndarray) -> bytes:
    header = _HEADER.pack(_MAGIC, _VERSION, _DFT_TAG.ljust(32, b"\0"),
                          grid.n, grid.a, grid.b, eps, tau_ref, t_final)
    body = (header
            + np.ascontiguousarray(u_hat, dtype="<c16").tobytes()
            + np.ascontiguousarray(ud_hat, dtype="<c16").tobytes())
    return body + hashlib.sha256(body).digest()


def _unpack(blob: bytes, path: Path):
    if len(blob) < _HEADER.size + 32:
        raise ValueError(f"reference file {path} is truncated")
    body, digest = blob[:-32], blob[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise ValueError(f"reference file {path} fails its content hash")
    magic, version, tag, n, a, b, eps, tau_ref, t_final = \
        _HEADER.unpack_from(body)
    if magic != _MAGIC:
        raise ValueError(f"{path} is not a reference container")
    if version != _VERSION:
        raise ValueError(f"{path} has unsupported version {version}")
    if tag.rstrip(b"\0") != _DFT_TAG:
        raise ValueError(f"{path} was written with a different DFT convention")
    data = np.frombuffer(body, dtype="<c16", offset=_HEADER.size)
    if data.size != 2 * n:
        raise ValueError(f"{path} holds {data.size} coefficients, "
                         f"expected {2 * n}")
    grid = make_grid(a, b, n)
    u = FieldHat(grid, data[:n].astype(np.complex128))
    ud = FieldHat(grid, data[n:].astype(np.complex128))
    return grid, eps, tau_ref, t_final, u, ud


def load_reference(eps: float,
                   store_dir: str | os.PathLike | None = None
                   ) -> ReferenceSolution | None:
    """The stored reference for eps, or None when absent."""
    path = reference_path(eps, store_dir)
    if not path.exists():
        return None
    _, eps_file, tau_ref, t_final, u, ud = _unpack(path.read_bytes(), path)
    if eps_file != float(eps):
        raise ValueError(f"{path} stores eps = {eps_file}, expected {eps}")
    return ReferenceSolution(u=u, u_dot=ud, eps=eps_file, tau_ref=tau_ref,
                             t_final=t_final, path=path)


def reference_solution(eps: float,
                       store_dir: str | os.PathLike | None = None
                       ) -> ReferenceSolution:
    """Fine-resolution stepper run for the study scenario at this eps,
    computed once and persisted; later calls load the stored artifact."""
    existing = load_reference(eps, store_dir)
    if existing is not None:
        return existing
    config = SolverConfig(a=_REF_DOMAIN[0], b=_REF_DOMAIN[1], n=_REF_N,
                          eps=eps, tau=_REF_TAU, t_final=1.0, lam=1.0,
                          initial_data="gaussian")
    state = propagate(config)
    path = reference_path(eps, store_dir)
    path.parent.mkdir(parents=True, exist_ok=True)
    blob = _pack(state.u.grid, float(eps), _REF_TAU, config.t_final,
                 state.u.coeffs, state.u_dot.coeffs)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return ReferenceSolution(u=state.u, u_dot=state.u_dot, eps=float(eps),
                             tau_ref=_REF_TAU, t_final=config.t_final,
                             path=path)
