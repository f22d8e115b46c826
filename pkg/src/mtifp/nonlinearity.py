"""Cubic-nonlinearity kernels for the two-carrier decomposition.

With u = e^{is/eps^2} z+ + e^{-is/eps^2} conj(z-) + r and f(u) = lam |u|^2 u,
the nonlinearity splits exactly into five harmonics:

    f(u) = e^{is/eps^2} f+ + e^{-is/eps^2} conj(f-)
         + e^{3is/eps^2} g+ + e^{-3is/eps^2} conj(g-) + w

where f+- and g+- depend on (z+, z-) only and w collects every r-coupled
term.  All kernels are pointwise on node values; callers own the transforms
and any aliasing policy.  Every kernel commutes with a global phase rotation
of its complex inputs (the gauge invariance of |u|^2 u).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels


@dataclass(frozen=True)
class CubicParams:
    """Coefficient of the cubic term f(u) = lam |u|^2 u; any finite real."""

    lam: float

    def __post_init__(self):
        if not math.isfinite(self.lam):
            raise ValueError(f"cubic coefficient must be finite, got {self.lam}")


def _as_nodes(*values):
    arrays = tuple(
        np.ascontiguousarray(np.atleast_1d(np.asarray(v, dtype=np.complex128)))
        for v in values
    )
    scalar = all(np.ndim(v) == 0 for v in values)
    return arrays, scalar


def _unwrap(scalar: bool, *outputs):
    if scalar:
        outputs = tuple(complex(o[0]) for o in outputs)
    return outputs if len(outputs) > 1 else outputs[0]


def f_pm(zp, zm, params: CubicParams):
    """First-harmonic pair: f+- = lam (|z+-|^2 + 2|z-+|^2) z+-."""
    (zp, zm), scalar = _as_nodes(zp, zm)
    return _unwrap(scalar, *_kernels.cubic_f(zp, zm, params.lam))


def fdot_pm(zp, zm, zp_dot, zm_dot, params: CubicParams):
    """Exact s-derivative of f_pm along the path (z+(s), z-(s))."""
    (zp, zm, zp_dot, zm_dot), scalar = _as_nodes(zp, zm, zp_dot, zm_dot)
    out = _kernels.cubic_bundle(zp, zm, zp_dot, zm_dot, params.lam)
    return _unwrap(scalar, out[2], out[3])


def g_pm(zp, zm, params: CubicParams):
    """Third-harmonic pair: g+- = lam z+-^2 z-+."""
    (zp, zm), scalar = _as_nodes(zp, zm)
    lam = params.lam
    gp = lam * zp * zp * zm
    gm = lam * zm * zm * zp
    return _unwrap(scalar, gp, gm)


def gdot_pm(zp, zm, zp_dot, zm_dot, params: CubicParams):
    """Exact s-derivative of g_pm along the path (z+(s), z-(s))."""
    (zp, zm, zp_dot, zm_dot), scalar = _as_nodes(zp, zm, zp_dot, zm_dot)
    out = _kernels.cubic_bundle(zp, zm, zp_dot, zm_dot, params.lam)
    return _unwrap(scalar, out[6], out[7])


def cubic_bundle(zp, zm, zp_dot, zm_dot, params: CubicParams):
    """All eight kernels (f+-, df+-, g+-, dg+-) in one fused pass.

    The stepper's hot path; identical values to the individual functions.
    """
    (zp, zm, zp_dot, zm_dot), scalar = _as_nodes(zp, zm, zp_dot, zm_dot)
    return _unwrap(scalar,
                   *_kernels.cubic_bundle(zp, zm, zp_dot, zm_dot, params.lam))


def w_remainder(zp, zm, r, s: float, eps: float, params: CubicParams):
    """Remainder coupling w = f(u) - f(u - r) at local time s.

    Exactly zero when r = 0; reduces to lam |r|^2 r when z+- = 0.
    """
    (zp, zm, r), scalar = _as_nodes(zp, zm, r)
    phase = np.exp(1j * s / (eps * eps))
    carrier = phase * zp + np.conj(phase) * np.conj(zm)
    u = carrier + r
    return _unwrap(scalar, _kernels.cubic_difference(
        np.ascontiguousarray(u), np.ascontiguousarray(carrier), params.lam))


def reconstruct_f(zp, zm, r, s: float, eps: float, params: CubicParams):
    """Assemble the five-term split; equals lam |u|^2 u (test oracle)."""
    (zp, zm, r), scalar = _as_nodes(zp, zm, r)
    fp, fm = _kernels.cubic_f(zp, zm, params.lam)
    lam = params.lam
    gp = lam * zp * zp * zm
    gm = lam * zm * zm * zp
    w = w_remainder(zp, zm, r, s, eps, params)
    w = np.atleast_1d(np.asarray(w))
    phase = np.exp(1j * s / (eps * eps))
    ph3 = phase * phase * phase
    out = (phase * fp + np.conj(phase) * np.conj(fm)
           + ph3 * gp + np.conj(ph3) * np.conj(gm) + w)
    return _unwrap(scalar, out)
