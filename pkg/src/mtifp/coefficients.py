"""Exponential-integrator coefficients for the two-scale Klein-Gordon stepper.

For wavenumber ``mu`` and ``0 < eps <= 1`` the mode quantities are

    s      = sqrt(1 + mu^2 eps^2)
    omega  = s / eps^2                       r-propagator frequency
    lam+/- = -(1 +/- s) / eps^2              z-propagator phase rates

with ``lam+ + lam- = -2/eps^2``, ``lam+ * lam- = -mu^2/eps^2`` and the
cancellation-free form ``lam- = mu^2 / (1 + s)``.

The homogeneous pair ``(a, eps^2 b)`` solves ``eps^2 y'' + 2i y' + mu^2 y = 0``
with data ``(1, 0)`` and ``(0, 1)``; the forcing coefficients are the Duhamel
weights of a linear-in-time force against ``b`` and ``b'`` and, for the
remainder equation, of the third-harmonic carrier against the trig propagator:

    c  = int_0^tau b(tau - th) dth            d  = same with a factor th
    c' = same against b'                      d' = same against b' with th
    p  = int_0^tau sin(omega (tau-th)) / (eps^2 omega) e^{3i th/eps^2} dth
    q  = same with a factor th
    p' = int_0^tau cos(omega (tau-th)) / eps^2 e^{3i th/eps^2} dth
    q' = same with a factor th

Every integrand is a combination of ``exp(i k th)`` and ``th exp(i k th)``, so
closed forms reduce to the primitives ``I(k)`` and ``J(k)`` below, which carry
a series branch across their removable singularity at ``k = 0`` (reached at
``mu = 0`` through ``lam-`` and at the resonance ``mu^2 eps^2 = 8`` through
``3/eps^2 - omega``).  Exact identities used: ``c' = b(tau)``, ``d' = c(tau)``
and ``a' = -mu^2 b``.

``quadrature_reference`` evaluates the defining integrals numerically and is
the independent check for the closed forms: oscillation-aware panel
Gauss-Legendre up to a total-phase budget, and beyond it a period-exact fold
(full periods of ``exp(i k th)`` integrate to zero; the fold point is computed
with mpmath argument reduction so no accuracy is lost at huge phase).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np

from .spectral import SpectralGrid

# series branch for I(k), J(k): switch when |k tau| < _SERIES_CUT; 12 terms keep
# the truncation below 1e-20 relative while the direct branch still has
# cancellation error under 2e-13 at the switchover (enforced by test)
_SERIES_CUT = 0.05
_SERIES_TERMS = 12
_I_COEF = np.array([1.0 / math.factorial(n + 1) for n in range(_SERIES_TERMS)])
_J_COEF = np.array(
    [1.0 / (math.factorial(n) * (n + 2)) for n in range(_SERIES_TERMS)]
)


# Homogeneous-propagator phases are integer combinations of theta1 = tau/eps^2
# and theta2 = omega tau.  Their arguments reach 1e8 radians, and the per-step
# rounding of a double product would accumulate coherently over the 1e5-step
# runs the error study needs, so both angles are formed and reduced mod 2 pi in
# extended precision before any trig is taken.  The Duhamel weights stay on the
# double path: they are O(tau) per step, so their phase rounding stays at the
# roundoff floor over any run length.
_TWO_PI_LD = 2.0 * np.arccos(np.longdouble(-1.0))


def _reduced_angles(mu, eps: float, tau: float):
    """(theta1, theta2) = (tau/eps^2, omega tau) reduced mod 2 pi, as doubles
    (scalar, array), computed in extended precision."""
    eps_ld = np.longdouble(eps)
    tau_ld = np.longdouble(tau)
    mu_ld = np.asarray(mu, dtype=np.longdouble)
    t1 = tau_ld / (eps_ld * eps_ld)
    t2 = np.sqrt(1.0 + (mu_ld * eps_ld) ** 2) * t1
    return float(np.mod(t1, _TWO_PI_LD)), \
        np.mod(t2, _TWO_PI_LD).astype(float)


def _int_exp(k: np.ndarray, tau: float) -> np.ndarray:
    """I(k) = int_0^tau exp(i k th) dth, stable through k = 0."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    kt = k * tau
    out = np.empty(k.shape, dtype=np.complex128)
    small = np.abs(kt) < _SERIES_CUT
    if np.any(small):
        x = 1j * kt[small]
        acc = np.zeros_like(x)
        for coef in _I_COEF[::-1]:
            acc = acc * x + coef
        out[small] = tau * acc
    big = ~small
    if np.any(big):
        kb = k[big]
        out[big] = (np.exp(1j * kb * tau) - 1.0) / (1j * kb)
    return out


def _int_exp_theta(k: np.ndarray, tau: float) -> np.ndarray:
    """J(k) = int_0^tau th exp(i k th) dth, stable through k = 0."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    kt = k * tau
    out = np.empty(k.shape, dtype=np.complex128)
    small = np.abs(kt) < _SERIES_CUT
    if np.any(small):
        x = 1j * kt[small]
        acc = np.zeros_like(x)
        for coef in _J_COEF[::-1]:
            acc = acc * x + coef
        out[small] = tau * tau * acc
    big = ~small
    if np.any(big):
        kb = k[big]
        ek = np.exp(1j * kb * tau)
        out[big] = tau * ek / (1j * kb) + (ek - 1.0) / (kb * kb)
    return out


@dataclass(frozen=True)
class ModeFrequencies:
    """Per-mode frequency data; all fields are arrays over the mode axis."""

    mu: np.ndarray
    s: np.ndarray
    omega: np.ndarray
    lam_plus: np.ndarray
    lam_minus: np.ndarray


def mode_frequencies(mu, eps: float) -> ModeFrequencies:
    """Frequencies and phase rates for wavenumbers ``mu`` at parameter ``eps``."""
    if not 0.0 < eps <= 1.0:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    mu_sq = mu * mu
    s = np.sqrt(1.0 + mu_sq * eps * eps)
    omega = s / (eps * eps)
    lam_plus = -(1.0 + s) / (eps * eps)
    lam_minus = mu_sq / (1.0 + s)
    return ModeFrequencies(mu=mu, s=s, omega=omega, lam_plus=lam_plus,
                           lam_minus=lam_minus)


@dataclass(frozen=True)
class PropagatorCoefficients:
    """Homogeneous z-propagator entries: value row (a, b) and rate row (a', b')."""

    a: np.ndarray
    b: np.ndarray
    a_dot: np.ndarray
    b_dot: np.ndarray


def ab_coefficients(mu, eps: float, tau: float) -> PropagatorCoefficients:
    """Closed-form homogeneous propagator for one step of length ``tau``.

    ``y(tau) = a y(0) + eps^2 b y'(0)`` and the same with the primed row for
    ``y'(tau)``, for ``eps^2 y'' + 2i y' + mu^2 y = 0``.  Assembled in the trig
    form ``a = e^{-i tau/eps^2}(cos omega tau + i sin omega tau / s)`` from
    extended-precision reduced angles.
    """
    if tau < 0:
        raise ValueError(f"tau must be nonnegative, got {tau}")
    fr = mode_frequencies(mu, eps)
    theta1, theta2 = _reduced_angles(fr.mu, eps, tau)
    e1 = complex(np.cos(theta1) - 1j * np.sin(theta1))  # e^{-i tau/eps^2}
    cosw = np.cos(theta2)
    sinw_over_s = np.sin(theta2) / fr.s
    a = e1 * (cosw + 1j * sinw_over_s)
    b = e1 * sinw_over_s
    a_dot = -fr.mu * fr.mu * b
    b_dot = e1 * (cosw - 1j * sinw_over_s) / (eps * eps)
    return PropagatorCoefficients(a=a, b=b, a_dot=a_dot, b_dot=b_dot)


@dataclass(frozen=True)
class ForcingCoefficients:
    """Duhamel weights for the z updates (c, d, c', d') and the remainder
    update (p, q, p', q')."""

    c: np.ndarray
    d: np.ndarray
    c_dot: np.ndarray
    d_dot: np.ndarray
    p: np.ndarray
    q: np.ndarray
    p_dot: np.ndarray
    q_dot: np.ndarray


def forcing_coefficients(mu, eps: float, tau: float) -> ForcingCoefficients:
    """Closed-form forcing weights for one step of length ``tau``."""
    if tau < 0:
        raise ValueError(f"tau must be nonnegative, got {tau}")
    fr = mode_frequencies(mu, eps)
    lp, lm, s, omega = fr.lam_plus, fr.lam_minus, fr.s, fr.omega
    eps_sq = eps * eps
    denom = lp - lm
    pref = -1j / (eps_sq * denom)  # prefactor of b as sum of exponentials

    i_p, i_m = _int_exp(lp, tau), _int_exp(lm, tau)
    j_p, j_m = _int_exp_theta(lp, tau), _int_exp_theta(lm, tau)
    c = pref * (i_p - i_m)
    d = tau * c - pref * (j_p - j_m)
    # int_0^tau b'(tau-th) dth = b(tau) - b(0) = b(tau); written out through the
    # same exponentials as c so the quadrature comparison shares their rounding
    c_dot = pref * (1j * lp * i_p - 1j * lm * i_m)
    d_dot = c  # integrate the th-weighted version by parts

    nu = 3.0 / eps_sq
    i_lo, i_hi = _int_exp(nu - omega, tau), _int_exp(nu + omega, tau)
    j_lo, j_hi = _int_exp_theta(nu - omega, tau), _int_exp_theta(nu + omega, tau)
    e_o = np.exp(1j * omega * tau)
    e_oc = np.conj(e_o)
    two_i_s = 2j * s  # 2i eps^2 omega
    p = (e_o * i_lo - e_oc * i_hi) / two_i_s
    q = (e_o * j_lo - e_oc * j_hi) / two_i_s
    p_dot = (e_o * i_lo + e_oc * i_hi) / (2.0 * eps_sq)
    q_dot = (e_o * j_lo + e_oc * j_hi) / (2.0 * eps_sq)
    return ForcingCoefficients(c=c, d=d, c_dot=c_dot, d_dot=d_dot,
                               p=p, q=q, p_dot=p_dot, q_dot=q_dot)


@dataclass(frozen=True)
class StepCoefficients:
    """All per-mode arrays one step needs, in logical mode order."""

    grid: SpectralGrid
    eps: float
    tau: float
    freqs: ModeFrequencies
    a: np.ndarray
    b: np.ndarray
    a_dot: np.ndarray
    b_dot: np.ndarray
    c: np.ndarray
    d: np.ndarray
    c_dot: np.ndarray
    d_dot: np.ndarray
    p: np.ndarray
    q: np.ndarray
    p_dot: np.ndarray
    q_dot: np.ndarray
    sin_over_omega: np.ndarray
    cos_omega_tau: np.ndarray
    carrier_phase: complex  # e^{i tau / eps^2}, extended-precision reduced


@lru_cache(maxsize=32)
def _build_cached(grid_key: tuple, eps: float, tau: float) -> StepCoefficients:
    grid = SpectralGrid(*grid_key)
    fr = mode_frequencies(grid.mu, eps)
    ab = ab_coefficients(grid.mu, eps, tau)
    fo = forcing_coefficients(grid.mu, eps, tau)
    theta1, theta2 = _reduced_angles(grid.mu, eps, tau)
    return StepCoefficients(
        grid=grid, eps=eps, tau=tau, freqs=fr,
        a=ab.a, b=ab.b, a_dot=ab.a_dot, b_dot=ab.b_dot,
        c=fo.c, d=fo.d, c_dot=fo.c_dot, d_dot=fo.d_dot,
        p=fo.p, q=fo.q, p_dot=fo.p_dot, q_dot=fo.q_dot,
        sin_over_omega=np.sin(theta2) / fr.omega,
        cos_omega_tau=np.cos(theta2),
        carrier_phase=complex(np.cos(theta1) + 1j * np.sin(theta1)),
    )


def build_step_coefficients(grid: SpectralGrid, eps: float, tau: float) -> StepCoefficients:
    """Coefficient table for ``(grid, eps, tau)``; cached, recomputed only when
    one of the three changes."""
    if tau <= 0:
        raise ValueError(f"step size must be positive, got tau={tau}")
    return _build_cached(grid.key, float(eps), float(tau))


# ---------------------------------------------------------------------------
# Quadrature oracle
# ---------------------------------------------------------------------------

_GL_POINTS = 12
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(_GL_POINTS)
_PHASE_PER_PANEL = np.pi  # at most half of the fastest period per panel
_FOLD_PHASE = 3.0e4       # beyond this total phase, fold period-exactly
_MAX_REFINE = 8

_QUADRATURE_KINDS = ("c", "d", "c_dot", "d_dot", "p", "q", "p_dot", "q_dot",
                     "p_unit")


class QuadratureError(RuntimeError):
    """Raised when the adaptive quadrature fails to converge."""


_ROUNDOFF_FACTOR = 32.0 * np.finfo(float).eps


def _panel_gl(fun, lo: float, hi: float, n_panels: int) -> tuple[complex, float]:
    edges = np.linspace(lo, hi, n_panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1] - edges[0])
    pts = mid[:, None] + half * _GL_NODES[None, :]
    vals = fun(pts.reshape(-1)).reshape(pts.shape)
    total = complex(half * np.sum(vals @ _GL_WEIGHTS))
    l1 = float(half * np.sum(np.abs(vals) @ _GL_WEIGHTS))
    return total, l1


def _adaptive_gl(fun, lo: float, hi: float, fastest: float,
                 abs_tol: float) -> tuple[complex, float]:
    """Panel Gauss-Legendre with panels no wider than half the fastest period,
    refined until two successive levels agree.

    Returns ``(value, err_bound)``.  The agreement target, and the reported
    bound, are floored at the roundoff of the panel sum (machine epsilon times
    the L1 mass of the integrand): for strongly cancelling oscillatory
    integrals no refinement in fixed precision can do better.
    """
    if hi <= lo:
        return 0.0 + 0.0j, 0.0
    phase = fastest * (hi - lo)
    n = max(4, int(math.ceil(phase / _PHASE_PER_PANEL)))
    prev, l1 = _panel_gl(fun, lo, hi, n)
    for _ in range(_MAX_REFINE):
        n *= 2
        cur, l1 = _panel_gl(fun, lo, hi, n)
        floor = _ROUNDOFF_FACTOR * l1
        if abs(cur - prev) <= max(abs_tol, floor):
            return cur, max(abs_tol, floor)
        prev = cur
    raise QuadratureError(
        f"quadrature did not reach abs_tol={abs_tol:g} after {_MAX_REFINE} "
        f"refinements (interval [{lo:g}, {hi:g}], fastest frequency {fastest:g})"
    )


def _folded_moment(k: float, tau: float, order: int,
                   abs_tol: float) -> tuple[complex, float]:
    """M_order(k) = int_0^tau th^order exp(i k th) dth for huge ``|k| tau``.

    Full periods of the carrier integrate to zero exactly, and the th-weight
    adds one one-period moment per full period; only windows no longer than a
    single period are integrated numerically.  The fold keeps the phase of the
    rounded double product ``k*tau`` (reduced mod 2 pi in 40-digit arithmetic):
    that single rounding is shared with any double-precision evaluation of
    ``exp(i k tau)``, and at huge phase it dwarfs every other error source, so
    sharing it is what lets the comparison resolve the formulas themselves.
    """
    if k < 0.0:
        val, bound = _folded_moment(-k, tau, order, abs_tol)
        return complex(np.conj(val)), bound
    with mpmath.workdps(40):
        phase = mpmath.mpf(k * tau)
        two_pi = 2 * mpmath.pi
        n_full = int(mpmath.floor(phase / two_pi))
        rho = float((phase - n_full * two_pi) / k)
    period = float(2.0 * np.pi / k)

    def carrier(th):
        return np.exp(1j * k * th)

    q0_tail, e0 = _adaptive_gl(carrier, 0.0, rho, k, abs_tol)
    if order == 0:
        return q0_tail, e0
    q1_period, e1p = _adaptive_gl(lambda th: th * carrier(th), 0.0, period, k,
                                  abs_tol)
    q1_tail, e1t = _adaptive_gl(lambda th: th * carrier(th), 0.0, rho, k,
                                abs_tol)
    val = n_full * q1_period + (n_full * period) * q0_tail + q1_tail
    bound = n_full * e1p + (n_full * period) * e0 + e1t
    return val, bound


def _moment(k: float, tau: float, order: int,
            abs_tol: float) -> tuple[complex, float]:
    if abs(k) * tau <= _FOLD_PHASE:
        def fun(th):
            base = np.exp(1j * k * th)
            return th * base if order == 1 else base
        return _adaptive_gl(fun, 0.0, tau, abs(k), abs_tol)
    return _folded_moment(k, tau, order, abs_tol)


def quadrature_reference(mu: float, eps: float, tau: float, which: str,
                         abs_tol: float = 1e-13,
                         with_error: bool = False):
    """Numerically integrate the defining integral of one forcing coefficient.

    ``which`` selects among c, d, c_dot, d_dot, p, q, p_dot, q_dot, and the
    test variant ``p_unit`` (p with the third-harmonic carrier replaced by 1).
    With ``with_error=True`` returns ``(value, err_bound)`` where the bound
    covers both the quadrature tolerance and the fixed-precision roundoff
    floor of a cancelling oscillatory sum; otherwise returns the value alone.
    Raises :class:`QuadratureError` instead of returning an unconverged value.
    """
    if which not in _QUADRATURE_KINDS:
        raise ValueError(f"unknown coefficient {which!r}, expected one of "
                         f"{_QUADRATURE_KINDS}")
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    val, bound = _quadrature_with_bound(float(mu), eps, tau, which, abs_tol)
    if with_error:
        return val, bound
    return val


def _quadrature_with_bound(mu: float, eps: float, tau: float, which: str,
                           abs_tol: float) -> tuple[complex, float]:
    fr = mode_frequencies(mu, eps)
    lp = float(fr.lam_plus[0])
    lm = float(fr.lam_minus[0])
    omega = float(fr.omega[0])
    eps_sq = eps * eps
    nu = 3.0 / eps_sq
    theta_weight = which in ("d", "d_dot", "q", "q_dot")

    if which in ("c", "d", "c_dot", "d_dot"):
        fastest = abs(lp)
        if fastest * tau <= _FOLD_PHASE:
            pref = -1j / (eps_sq * (lp - lm))

            def b_of(sig):
                return pref * (np.exp(1j * lp * sig) - np.exp(1j * lm * sig))

            def bdot_of(sig):
                return (lp * np.exp(1j * lp * sig) - lm * np.exp(1j * lm * sig)) \
                    / (eps_sq * (lp - lm))

            kernel = b_of if which in ("c", "d") else bdot_of
            if theta_weight:
                def fun(th):
                    return kernel(tau - th) * th
            else:
                def fun(th):
                    return kernel(tau - th)
            return _adaptive_gl(fun, 0.0, tau, fastest, abs_tol)
        # folded: expand the kernel into its two exponentials; substituting
        # sig = tau - th turns the th-weight into tau*M0 - M1
        m0p, e0p = _moment(lp, tau, 0, abs_tol)
        m0m, e0m = _moment(lm, tau, 0, abs_tol)
        if which in ("c", "d"):
            wp, wm = -1j / (eps_sq * (lp - lm)), 1j / (eps_sq * (lp - lm))
        else:
            wp, wm = lp / (eps_sq * (lp - lm)), -lm / (eps_sq * (lp - lm))
        if not theta_weight:
            return wp * m0p + wm * m0m, abs(wp) * e0p + abs(wm) * e0m
        m1p, e1p = _moment(lp, tau, 1, abs_tol)
        m1m, e1m = _moment(lm, tau, 1, abs_tol)
        val = wp * (tau * m0p - m1p) + wm * (tau * m0m - m1m)
        bound = abs(wp) * (tau * e0p + e1p) + abs(wm) * (tau * e0m + e1m)
        return val, bound

    if which == "p_unit":
        def fun(th):
            return np.sin(omega * (tau - th)) / (eps_sq * omega) + 0.0j
        return _adaptive_gl(fun, 0.0, tau, omega, abs_tol)

    fastest = nu + omega
    if fastest * tau <= _FOLD_PHASE:
        if which in ("p", "q"):
            def kernel(th):
                return np.sin(omega * (tau - th)) / (eps_sq * omega) \
                    * np.exp(1j * nu * th)
        else:
            def kernel(th):
                return np.cos(omega * (tau - th)) / eps_sq * np.exp(1j * nu * th)
        if theta_weight:
            def fun(th):
                return kernel(th) * th
        else:
            fun = kernel
        return _adaptive_gl(fun, 0.0, tau, fastest, abs_tol)
    # folded: product-to-sum leaves carriers at nu -/+ omega
    order = 1 if theta_weight else 0
    m_lo, e_lo = _moment(nu - omega, tau, order, abs_tol)
    m_hi, e_hi = _moment(nu + omega, tau, order, abs_tol)
    e_o = complex(np.exp(1j * omega * tau))
    scale = 2.0 * eps_sq * omega if which in ("p", "q") else 2.0 * eps_sq
    bound = (e_lo + e_hi) / scale
    if which in ("p", "q"):
        return (e_o * m_lo - np.conj(e_o) * m_hi) / (2j * eps_sq * omega), bound
    return (e_o * m_lo + np.conj(e_o) * m_hi) / (2.0 * eps_sq), bound
