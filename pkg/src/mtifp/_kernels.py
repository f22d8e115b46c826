"""Pointwise cubic kernels, compiled with numba when available.

Two interchangeable backends provide the same three operations on complex128
node arrays:

    cubic_f(zp, zm, lam)                  -> (f+, f-)
    cubic_bundle(zp, zm, zpd, zmd, lam)   -> (f+, f-, df+, df-, g+, g-, dg+, dg-)
    cubic_difference(u, v, lam)           -> lam (|u|^2 u - |v|^2 v)

Selection: MTIFP_NUMBA=1 requires the jit backend, MTIFP_NUMBA=0 forces the
numpy one, unset tries numba and silently falls back.  Both backends stay
importable (the benchmark and the equivalence tests compare them directly).
"""

from __future__ import annotations

import os

import numpy as np


def _np_cubic_f(zp, zm, lam):
    ap = zp.real * zp.real + zp.imag * zp.imag
    am = zm.real * zm.real + zm.imag * zm.imag
    fp = lam * (ap + 2.0 * am) * zp
    fm = lam * (am + 2.0 * ap) * zm
    return fp, fm


def _np_cubic_bundle(zp, zm, zpd, zmd, lam):
    ap = zp.real * zp.real + zp.imag * zp.imag
    am = zm.real * zm.real + zm.imag * zm.imag
    fp = lam * (ap + 2.0 * am) * zp
    fm = lam * (am + 2.0 * ap) * zm
    rp = (np.conj(zp) * zpd + 2.0 * np.conj(zm) * zmd).real
    rm = (np.conj(zm) * zmd + 2.0 * np.conj(zp) * zpd).real
    fpd = 2.0 * lam * zp * rp + lam * zpd * (ap + 2.0 * am)
    fmd = 2.0 * lam * zm * rm + lam * zmd * (am + 2.0 * ap)
    gp = lam * zp * zp * zm
    gm = lam * zm * zm * zp
    gpd = 2.0 * lam * zp * zm * zpd + lam * zp * zp * zmd
    gmd = 2.0 * lam * zm * zp * zmd + lam * zm * zm * zpd
    return fp, fm, fpd, fmd, gp, gm, gpd, gmd


def _np_cubic_difference(u, v, lam):
    au = u.real * u.real + u.imag * u.imag
    av = v.real * v.real + v.imag * v.imag
    return lam * (au * u - av * v)


_NUMPY_BACKEND = {
    "cubic_f": _np_cubic_f,
    "cubic_bundle": _np_cubic_bundle,
    "cubic_difference": _np_cubic_difference,
}


def _build_numba_backend():
    from numba import njit

    @njit(cache=True, nogil=True)
    def cubic_f(zp, zm, lam):
        n = zp.shape[0]
        fp = np.empty(n, dtype=np.complex128)
        fm = np.empty(n, dtype=np.complex128)
        for i in range(n):
            p = zp[i]
            m = zm[i]
            ap = p.real * p.real + p.imag * p.imag
            am = m.real * m.real + m.imag * m.imag
            fp[i] = lam * (ap + 2.0 * am) * p
            fm[i] = lam * (am + 2.0 * ap) * m
        return fp, fm

    @njit(cache=True, nogil=True)
    def cubic_bundle(zp, zm, zpd, zmd, lam):
        n = zp.shape[0]
        fp = np.empty(n, dtype=np.complex128)
        fm = np.empty(n, dtype=np.complex128)
        fpd = np.empty(n, dtype=np.complex128)
        fmd = np.empty(n, dtype=np.complex128)
        gp = np.empty(n, dtype=np.complex128)
        gm = np.empty(n, dtype=np.complex128)
        gpd = np.empty(n, dtype=np.complex128)
        gmd = np.empty(n, dtype=np.complex128)
        for i in range(n):
            p = zp[i]
            m = zm[i]
            pd = zpd[i]
            md = zmd[i]
            ap = p.real * p.real + p.imag * p.imag
            am = m.real * m.real + m.imag * m.imag
            fp[i] = lam * (ap + 2.0 * am) * p
            fm[i] = lam * (am + 2.0 * ap) * m
            rp = (np.conj(p) * pd + 2.0 * np.conj(m) * md).real
            rm = (np.conj(m) * md + 2.0 * np.conj(p) * pd).real
            fpd[i] = 2.0 * lam * p * rp + lam * pd * (ap + 2.0 * am)
            fmd[i] = 2.0 * lam * m * rm + lam * md * (am + 2.0 * ap)
            gp[i] = lam * p * p * m
            gm[i] = lam * m * m * p
            gpd[i] = 2.0 * lam * p * m * pd + lam * p * p * md
            gmd[i] = 2.0 * lam * m * p * md + lam * m * m * pd
        return fp, fm, fpd, fmd, gp, gm, gpd, gmd

    @njit(cache=True, nogil=True)
    def cubic_difference(u, v, lam):
        n = u.shape[0]
        out = np.empty(n, dtype=np.complex128)
        for i in range(n):
            a = u[i]
            b = v[i]
            au = a.real * a.real + a.imag * a.imag
            av = b.real * b.real + b.imag * b.imag
            out[i] = lam * (au * a - av * b)
        return out

    return {
        "cubic_f": cubic_f,
        "cubic_bundle": cubic_bundle,
        "cubic_difference": cubic_difference,
    }


def numpy_backend() -> dict:
    return _NUMPY_BACKEND


_numba_cache: dict | None = None
_numba_failed = False


def numba_backend() -> dict | None:
    """The jit backend, or None when numba is unavailable."""
    global _numba_cache, _numba_failed
    if _numba_cache is None and not _numba_failed:
        try:
            _numba_cache = _build_numba_backend()
        except ImportError:
            _numba_failed = True
    return _numba_cache


def _select() -> tuple[str, dict]:
    flag = os.environ.get("MTIFP_NUMBA", "").strip()
    if flag == "0":
        return "numpy", _NUMPY_BACKEND
    jit = numba_backend()
    if flag == "1":
        if jit is None:
            raise RuntimeError("MTIFP_NUMBA=1 but numba is not importable")
        return "numba", jit
    if jit is not None:
        return "numba", jit
    return "numpy", _NUMPY_BACKEND


_ACTIVE_NAME, _ACTIVE = _select()


def active_backend_name() -> str:
    return _ACTIVE_NAME


cubic_f = _ACTIVE["cubic_f"]
cubic_bundle = _ACTIVE["cubic_bundle"]
cubic_difference = _ACTIVE["cubic_difference"]
