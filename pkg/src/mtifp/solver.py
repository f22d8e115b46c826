"""Two-scale exponential integrator time step and propagation loop.

One step: decompose (u^n, du^n) into well-prepared envelope/remainder data,
advance each Fourier mode with the closed-form propagator and Duhamel
weights, and reconstruct (u^{n+1}, du^{n+1}).  The z updates use the
(a, b, a', b') pair against the first-harmonic forcing; the remainder uses
the trigonometric propagator against the third harmonic, plus a trapezoid
endpoint term in dr built from w at the new time level, which is why u^{n+1}
is assembled before dr^{n+1} (the only ordering the data dependencies admit).

Whole-trajectory propagation runs exactly round(T/tau) steps and reports
divergence (any non-finite coefficient) instead of continuing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .coefficients import StepCoefficients, build_step_coefficients
from .mdf import _FILTERS, dealias_mask, velocity_filter
from .nonlinearity import CubicParams
from . import _kernels
from .spectral import (
    FieldHat,
    SpectralGrid,
    from_spectral,
    make_grid,
    spectral_derivative,
    to_spectral,
)

_INITIAL_DATA = ("gaussian", "gaussian-real", "zero")
_PHI2_CONVENTIONS = ("eps_independent", "literal")
_STEP_COUNT_TOL = 1e-9


class DivergenceError(RuntimeError):
    """A propagation produced non-finite values; carries where and how big."""

    def __init__(self, step_index: int, time: float, norm: float):
        self.step_index = step_index
        self.time = time
        self.norm = norm
        super().__init__(
            f"solution diverged at step {step_index} (t = {time:.6g}); "
            f"largest finite coefficient magnitude {norm:.3e}")


@dataclass(frozen=True)
class TabulatedData:
    """User-supplied nodal data profiles (phi1, phi2); the initial velocity
    is phi2 / eps^2 regardless of the built-in naming convention."""

    phi1: np.ndarray
    phi2: np.ndarray


@dataclass(frozen=True)
class SolverConfig:
    a: float = -16.0
    b: float = 16.0
    n: int = 128
    eps: float = 0.5
    tau: float = 1e-3
    t_final: float = 1.0
    lam: float = 1.0
    initial_data: str | TabulatedData = "gaussian"
    phi2_convention: str = "eps_independent"
    filter_kind: str = "sin"
    real_fast_path: bool = False
    dealias: bool = False

    def __post_init__(self):
        if not 0.0 < self.eps <= 1.0:
            raise ValueError(f"eps must lie in (0, 1], got {self.eps}")
        if self.tau <= 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.t_final <= 0:
            raise ValueError(f"t_final must be positive, got {self.t_final}")
        if not math.isfinite(self.lam):
            raise ValueError(f"lambda must be finite, got {self.lam}")
        if isinstance(self.initial_data, str) \
                and self.initial_data not in _INITIAL_DATA:
            raise ValueError(
                f"unknown initial data {self.initial_data!r}; expected one of "
                f"{_INITIAL_DATA} or tabulated values")
        if self.phi2_convention not in _PHI2_CONVENTIONS:
            raise ValueError(f"unknown phi2 convention "
                             f"{self.phi2_convention!r}")
        if self.filter_kind not in _FILTERS:
            raise ValueError(f"unknown filter {self.filter_kind!r}")
        ratio = self.t_final / self.tau
        if abs(ratio - round(ratio)) * self.tau > _STEP_COUNT_TOL * self.tau:
            raise ValueError(
                f"t_final = {self.t_final} is not an integer number of steps "
                f"of tau = {self.tau} (off by {abs(ratio - round(ratio)):.3g} "
                f"steps)")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.tau))

    def grid(self) -> SpectralGrid:
        return make_grid(self.a, self.b, self.n)

    def params(self) -> CubicParams:
        return CubicParams(self.lam)


@dataclass(frozen=True)
class SolverState:
    u: FieldHat
    u_dot: FieldHat
    step_index: int
    time: float


Observer = Callable[[int, float, SolverState], None]


def _initial_nodal(config: SolverConfig,
                   grid: SpectralGrid) -> tuple[np.ndarray, np.ndarray]:
    eps_sq = config.eps * config.eps
    data = config.initial_data
    if isinstance(data, TabulatedData):
        phi1 = np.asarray(data.phi1, dtype=np.complex128)
        phi2 = np.asarray(data.phi2, dtype=np.complex128)
        if phi1.shape != (grid.n,) or phi2.shape != (grid.n,):
            raise ValueError(
                f"tabulated data must have length {grid.n}, got "
                f"{phi1.shape} and {phi2.shape}")
        return phi1, phi2 / eps_sq
    if data == "zero":
        z = np.zeros(grid.n, dtype=np.complex128)
        return z, z.copy()
    bump = np.exp(-0.5 * grid.x * grid.x)
    phi1 = ((1.0 + 1.0j) if data == "gaussian" else 1.0) * bump
    phi2 = 1.5 * bump
    if config.phi2_convention == "literal":
        phi2 = phi2 / eps_sq
    return phi1.astype(np.complex128), (phi2 / eps_sq).astype(np.complex128)


def init(config: SolverConfig) -> SolverState:
    """Initial state u = phi1, du = phi2 / eps^2 on the configured grid."""
    grid = config.grid()
    u0, ud0 = _initial_nodal(config, grid)
    if config.real_fast_path:
        scale = max(float(np.max(np.abs(u0))), float(np.max(np.abs(ud0))), 1.0)
        imag = max(float(np.max(np.abs(u0.imag))),
                   float(np.max(np.abs(ud0.imag))))
        if imag > 1e-12 * scale:
            raise ValueError("real_fast_path requires real initial data")
    return SolverState(u=to_spectral(grid, u0), u_dot=to_spectral(grid, ud0),
                       step_index=0, time=0.0)


@dataclass(frozen=True)
class _StepPlan:
    """Per-(grid, eps, tau, filter, dealias) constants in natural FFT order.

    The hot loop works shift-free against the raw transform layout; logical
    mode order appears only at the state boundaries.  conj_index implements
    the conjugate-field coefficient map l -> -l in that layout.
    """

    a: np.ndarray
    eps2_b: np.ndarray
    a_dot: np.ndarray
    eps2_b_dot: np.ndarray
    c: np.ndarray
    d: np.ndarray
    c_dot: np.ndarray
    d_dot: np.ndarray
    p: np.ndarray
    q: np.ndarray
    p_dot: np.ndarray
    q_dot: np.ndarray
    p_conj: np.ndarray
    q_conj: np.ndarray
    p_dot_conj: np.ndarray
    q_dot_conj: np.ndarray
    sin_over_omega: np.ndarray
    cos_omega_tau: np.ndarray
    filt: np.ndarray
    mask: np.ndarray | None
    conj_index: np.ndarray
    phase: complex
    tau_half_over_eps_sq: float


_PLAN_CACHE: dict = {}


def _step_plan(coeffs: StepCoefficients, config: SolverConfig) -> _StepPlan:
    key = (coeffs.grid.key, coeffs.eps, coeffs.tau, config.filter_kind,
           config.dealias)
    plan = _PLAN_CACHE.get(key)
    if plan is not None:
        return plan
    grid = coeffs.grid
    nat = np.fft.ifftshift
    eps_sq = coeffs.eps * coeffs.eps
    if config.filter_kind == "sin":
        filt = velocity_filter(grid.mu, coeffs.tau)
    else:
        filt = grid.mu_sq
    p, q = nat(coeffs.p), nat(coeffs.q)
    pd, qd = nat(coeffs.p_dot), nat(coeffs.q_dot)
    plan = _StepPlan(
        a=nat(coeffs.a), eps2_b=eps_sq * nat(coeffs.b),
        a_dot=nat(coeffs.a_dot), eps2_b_dot=eps_sq * nat(coeffs.b_dot),
        c=nat(coeffs.c), d=nat(coeffs.d),
        c_dot=nat(coeffs.c_dot), d_dot=nat(coeffs.d_dot),
        p=p, q=q, p_dot=pd, q_dot=qd,
        p_conj=np.conj(p), q_conj=np.conj(q),
        p_dot_conj=np.conj(pd), q_dot_conj=np.conj(qd),
        sin_over_omega=nat(coeffs.sin_over_omega),
        cos_omega_tau=nat(coeffs.cos_omega_tau),
        filt=nat(filt),
        mask=nat(dealias_mask(grid)) if config.dealias else None,
        conj_index=np.concatenate(([0], np.arange(grid.n - 1, 0, -1))),
        phase=coeffs.carrier_phase,
        tau_half_over_eps_sq=coeffs.tau / (2.0 * eps_sq),
    )
    if len(_PLAN_CACHE) >= 8:
        _PLAN_CACHE.pop(next(iter(_PLAN_CACHE)))
    _PLAN_CACHE[key] = plan
    return plan


def step(state: SolverState, coeffs: StepCoefficients,
         config: SolverConfig) -> SolverState:
    """One step of length tau; coeffs must match (grid, eps, tau)."""
    grid = coeffs.grid
    if state.u.grid != grid:
        raise ValueError("state grid does not match coefficient grid")
    plan = _step_plan(coeffs, config)
    n = grid.n
    eps_sq = coeffs.eps * coeffs.eps
    lam = config.lam
    fast = config.real_fast_path
    fft, ifft = np.fft.fft, np.fft.ifft
    cj = plan.conj_index

    u_nat = np.fft.ifftshift(state.u.coeffs)
    ud_nat = np.fft.ifftshift(state.u_dot.coeffs)
    i_eps_sq = 1j * eps_sq
    zp_hat = 0.5 * (u_nat - i_eps_sq * ud_nat)
    zp = ifft(zp_hat) * n
    if fast:
        zm_hat, zm = zp_hat, zp
    else:
        zm_hat = 0.5 * np.conj(u_nat[cj] + i_eps_sq * ud_nat[cj])
        zm = ifft(zm_hat) * n
    fp, fm = _kernels.cubic_f(zp, zm, lam)
    fp_hat = fft(fp) / n
    fm_hat = fp_hat if fast else fft(fm) / n
    if plan.mask is not None:
        fp_hat = plan.mask * fp_hat
        fm_hat = fp_hat if fast else plan.mask * fm_hat
    zpd_hat = 0.5j * (plan.filt * zp_hat + fp_hat)
    zmd_hat = zpd_hat if fast else 0.5j * (plan.filt * zm_hat + fm_hat)
    rd_hat = -zpd_hat - np.conj(zmd_hat[cj])

    zpd = ifft(zpd_hat) * n
    zmd = zpd if fast else ifft(zmd_hat) * n
    _, _, fpd, fmd, gp, gm, gpd, gmd = _kernels.cubic_bundle(zp, zm, zpd, zmd,
                                                             lam)
    fpd_hat = fft(fpd) / n
    gp_hat = fft(gp) / n
    gpd_hat = fft(gpd) / n
    if fast:
        fmd_hat, gm_hat, gmd_hat = fpd_hat, gp_hat, gpd_hat
    else:
        fmd_hat = fft(fmd) / n
        gm_hat = fft(gm) / n
        gmd_hat = fft(gmd) / n
    if plan.mask is not None:
        fpd_hat, fmd_hat = plan.mask * fpd_hat, plan.mask * fmd_hat
        gp_hat, gm_hat = plan.mask * gp_hat, plan.mask * gm_hat
        gpd_hat, gmd_hat = plan.mask * gpd_hat, plan.mask * gmd_hat
    gm_conj = np.conj(gm_hat[cj])
    gmd_conj = np.conj(gmd_hat[cj])

    zp_new = (plan.a * zp_hat + plan.eps2_b * zpd_hat
              - plan.c * fp_hat - plan.d * fpd_hat)
    zpd_new = (plan.a_dot * zp_hat + plan.eps2_b_dot * zpd_hat
               - plan.c_dot * fp_hat - plan.d_dot * fpd_hat)
    if fast:
        zm_new, zmd_new = zp_new, zpd_new
    else:
        zm_new = (plan.a * zm_hat + plan.eps2_b * zmd_hat
                  - plan.c * fm_hat - plan.d * fmd_hat)
        zmd_new = (plan.a_dot * zm_hat + plan.eps2_b_dot * zmd_hat
                   - plan.c_dot * fm_hat - plan.d_dot * fmd_hat)
    r_new = (plan.sin_over_omega * rd_hat
             - plan.p * gp_hat - plan.q * gpd_hat
             - plan.p_conj * gm_conj - plan.q_conj * gmd_conj)

    phase = plan.phase
    phase_c = phase.conjugate()
    zp_new_nodal = ifft(zp_new) * n
    zm_new_nodal = zp_new_nodal if fast else ifft(zm_new) * n
    r_new_nodal = ifft(r_new) * n
    carrier = phase * zp_new_nodal + phase_c * np.conj(zm_new_nodal)
    u_new_nodal = np.ascontiguousarray(carrier + r_new_nodal)
    w = _kernels.cubic_difference(u_new_nodal, np.ascontiguousarray(carrier),
                                  lam)
    w_hat = fft(w) / n
    if plan.mask is not None:
        w_hat = plan.mask * w_hat

    rd_new = (plan.cos_omega_tau * rd_hat
              - plan.p_dot * gp_hat - plan.q_dot * gpd_hat
              - plan.p_dot_conj * gm_conj - plan.q_dot_conj * gmd_conj
              - plan.tau_half_over_eps_sq * w_hat)

    zm_new_conj = np.conj(zm_new[cj])
    u_new = phase * zp_new + phase_c * zm_new_conj + r_new
    i_over_eps_sq = 1j / eps_sq
    ud_new = (phase * (zpd_new + i_over_eps_sq * zp_new)
              + phase_c * (np.conj(zmd_new[cj]) - i_over_eps_sq * zm_new_conj)
              + rd_new)
    return SolverState(
        u=FieldHat(grid, np.fft.fftshift(u_new)),
        u_dot=FieldHat(grid, np.fft.fftshift(ud_new)),
        step_index=state.step_index + 1,
        time=state.time + coeffs.tau)


def _check_finite(state: SolverState) -> None:
    for arr in (state.u.coeffs, state.u_dot.coeffs):
        if not np.all(np.isfinite(arr.view(float))):
            finite = arr[np.isfinite(arr)]
            norm = float(np.max(np.abs(finite))) if finite.size else math.inf
            raise DivergenceError(state.step_index, state.time, norm)


def propagate(config: SolverConfig,
              observers: Sequence[Observer] = ()) -> SolverState:
    """Run round(t_final / tau) steps; observers see every state including
    the initial one."""
    grid = config.grid()
    coeffs = build_step_coefficients(grid, config.eps, config.tau)
    state = init(config)
    for obs in observers:
        obs(0, 0.0, state)
    for _ in range(config.n_steps):
        state = step(state, coeffs, config)
        _check_finite(state)
        for obs in observers:
            obs(state.step_index, state.time, state)
    return state


def energy(state: SolverState, config: SolverConfig) -> float:
    """Conserved functional: int eps^2|du|^2 + |dx u|^2 + |u|^2/eps^2
    + lam |u|^4 / 2, by the nodal trapezoid rule."""
    grid = state.u.grid
    u = from_spectral(state.u)
    u_dot = from_spectral(state.u_dot)
    ux = from_spectral(spectral_derivative(state.u))
    eps_sq = config.eps * config.eps
    dens = (eps_sq * np.abs(u_dot) ** 2 + np.abs(ux) ** 2
            + np.abs(u) ** 2 / eps_sq + 0.5 * config.lam * np.abs(u) ** 4)
    return float(grid.h * np.sum(dens))
