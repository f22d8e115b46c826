"""Fourier pseudospectral grid, transforms and spectral norms on a periodic interval.

Conventions used throughout the package:

* ``N`` equispaced nodes ``x_j = a + j*h``, ``h = (b - a)/N``, right endpoint
  excluded (periodic wrap).
* Forward transform carries the ``1/N`` factor,
  ``v~_l = (1/N) sum_j v_j exp(-i mu_l (x_j - a))``, so coefficients are
  amplitudes of ``exp(i mu_l (x - a))``.
* Coefficients are stored in *logical* mode order ``l = -N/2 .. N/2 - 1``
  (array index 0 holds the Nyquist mode ``l = -N/2``).  The Nyquist mode is
  kept, never zeroed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class SpectralGrid:
    """Periodic interval ``[a, b)`` sampled at ``n`` equispaced nodes.

    Parameters
    ----------
    a, b : float
        Interval endpoints, ``b > a``.
    n : int
        Number of nodes; must be even and at least 4.
    """

    def __init__(self, a: float, b: float, n: int):
        if not b > a:
            raise ValueError(f"interval endpoints must satisfy b > a, got [{a}, {b}]")
        if n < 4:
            raise ValueError(f"grid needs at least 4 nodes, got n={n}")
        if n % 2 != 0:
            raise ValueError(f"grid size must be even, got n={n}")
        self.a = float(a)
        self.b = float(b)
        self.n = int(n)
        self.length = self.b - self.a
        self.h = self.length / self.n
        self.x = self.a + self.h * np.arange(self.n)
        # wavenumbers in logical order l = -n/2 .. n/2 - 1
        self.modes = np.arange(-self.n // 2, self.n // 2)
        self.mu = 2.0 * np.pi * self.modes / self.length
        self.mu_sq = self.mu * self.mu

    @property
    def key(self) -> tuple[float, float, int]:
        return (self.a, self.b, self.n)

    def __eq__(self, other) -> bool:
        return isinstance(other, SpectralGrid) and self.key == other.key

    def __hash__(self) -> int:
        return hash(self.key)

    def __repr__(self) -> str:
        return f"SpectralGrid(a={self.a}, b={self.b}, n={self.n})"


def make_grid(a: float, b: float, n: int) -> SpectralGrid:
    """Build a :class:`SpectralGrid` on ``[a, b)`` with ``n`` nodes."""
    return SpectralGrid(a, b, n)


@dataclass(frozen=True)
class FieldHat:
    """Spectral representation of a periodic field: coefficients in logical order."""

    grid: SpectralGrid
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.shape != (self.grid.n,):
            raise ValueError(
                f"coefficient array has shape {c.shape}, expected ({self.grid.n},)"
            )
        object.__setattr__(self, "coeffs", c)


def to_spectral(grid: SpectralGrid, values: np.ndarray) -> FieldHat:
    """Transform nodal values to spectral coefficients (forward DFT, 1/N factor).

    Parameters
    ----------
    grid : SpectralGrid
        Grid the values live on.
    values : array_like
        Nodal values, length ``grid.n``; real input is promoted to complex.
    """
    v = np.asarray(values, dtype=np.complex128)
    if v.shape != (grid.n,):
        raise ValueError(f"value array has shape {v.shape}, expected ({grid.n},)")
    return FieldHat(grid, np.fft.fftshift(np.fft.fft(v)) / grid.n)


def from_spectral(field: FieldHat) -> np.ndarray:
    """Evaluate the trigonometric interpolant at the grid nodes (inverse DFT)."""
    return np.fft.ifft(np.fft.ifftshift(field.coeffs)) * field.grid.n


def conj_coeffs(coeffs: np.ndarray) -> np.ndarray:
    """Spectral image of pointwise conjugation: ``out_l = conj(in_{-l})``.

    The Nyquist mode ``l = -N/2`` has no stored partner ``+N/2`` and maps to
    itself conjugated.  Works on any array in logical order.
    """
    return np.conj(np.roll(coeffs[::-1], 1))


def conj_field(field: FieldHat) -> FieldHat:
    """Spectral counterpart of conjugating the nodal field."""
    return FieldHat(field.grid, conj_coeffs(field.coeffs))


def spectral_derivative(field: FieldHat, order: int = 1) -> FieldHat:
    """Differentiate by multiplying mode ``l`` with ``(i mu_l)**order``."""
    if order < 0:
        raise ValueError(f"derivative order must be nonnegative, got {order}")
    mult = (1j * field.grid.mu) ** order
    return FieldHat(field.grid, field.coeffs * mult)


def resample(field: FieldHat, m: int) -> FieldHat:
    """Re-expand the field on an ``m``-node grid over the same interval.

    Upsampling zero-pads the spectrum (the interpolant is unchanged, so
    evaluating at the original nodes reproduces the original values);
    downsampling keeps the central block ``l = -m/2 .. m/2 - 1``, which is the
    L2-orthogonal projection onto the coarser mode set.
    """
    g = field.grid
    if m < 4:
        raise ValueError(f"resample target needs at least 4 nodes, got m={m}")
    if m % 2 != 0:
        raise ValueError(f"resample target must be even, got m={m}")
    if m == g.n:
        return FieldHat(g, field.coeffs.copy())
    fine = SpectralGrid(g.a, g.b, m)
    out = np.zeros(m, dtype=np.complex128)
    if m > g.n:
        off = (m - g.n) // 2
        out[off : off + g.n] = field.coeffs
    else:
        off = (g.n - m) // 2
        out[:] = field.coeffs[off : off + m]
    return FieldHat(fine, out)


def sample(field: FieldHat, m: int) -> FieldHat:
    """Restrict the field to the ``m``-node grid by sampling at its nodes.

    ``m`` must divide the source grid size, so the coarse nodes are a subset
    of the fine ones.  Unlike :func:`resample`, which projects, sampling is
    interpolation: source modes outside the coarse band fold onto their
    aliases ``l mod m``.  This is the restriction a nodal comparison between
    two resolutions implies.
    """
    g = field.grid
    if m == g.n:
        return FieldHat(g, field.coeffs.copy())
    if m < 4 or g.n % m != 0:
        raise ValueError(f"sample target must divide n={g.n}, got m={m}")
    coarse = SpectralGrid(g.a, g.b, m)
    return to_spectral(coarse, from_spectral(field)[:: g.n // m])


_SOBOLEV_ORDERS = (0, 1, 2)


def sobolev_norm(field: FieldHat, order: int = 2) -> float:
    """Spectral Sobolev norm ``sqrt(sum_l w_l |v~_l|^2)``.

    Weights: ``w_l = 1`` for order 0, ``1 + mu_l^2`` for order 1 and
    ``1 + mu_l^2 + mu_l^4`` for order 2 (one term per derivative, not the
    squared binomial).
    """
    if order not in _SOBOLEV_ORDERS:
        raise ValueError(f"sobolev_norm supports orders {_SOBOLEV_ORDERS}, got {order}")
    mag = np.abs(field.coeffs) ** 2
    w = np.ones_like(mag)
    if order >= 1:
        w = w + field.grid.mu_sq
    if order == 2:
        w = w + field.grid.mu_sq * field.grid.mu_sq
    return float(np.sqrt(np.sum(w * mag)))
