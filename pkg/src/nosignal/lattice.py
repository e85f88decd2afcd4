"""Periodic position/wavenumber lattice and the unitary transform between them.

Position nodes are ``y_n = -L + n*dy`` for ``n = 0..N-1`` and wavenumber nodes
are ``k_m = m*dk`` for ``m = -N/2..N/2-1``. Spectra are always stored in that
ascending ``m`` order (index ``j`` holds ``m = j - N/2``).

The transform is the matrix ``T[m, n] = exp(-i k_m y_n) / sqrt(N)``, which is
exactly unitary. Physical amplitudes normalized against ``dy`` and ``dk``
differ from the unitary ones by ``sqrt(dy/dk)`` per axis; see
:attr:`GridSpec.spectral_scale`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    """Box of half-width ``half_width`` sampled at ``num_points`` nodes."""

    half_width: float
    num_points: int
    node_spacing: float = field(init=False)
    wavenumber_spacing: float = field(init=False)

    def __post_init__(self):
        L, N = self.half_width, self.num_points
        if isinstance(N, bool) or not isinstance(N, (int, np.integer)):
            raise TypeError(f"num_points must be an integer, got {N!r}")
        if N < 8 or N % 2:
            raise ValueError(f"num_points must be even and >= 8, got {N}")
        if not (math.isfinite(L) and L > 0):
            raise ValueError(f"half_width must be positive and finite, got {L}")
        object.__setattr__(self, "num_points", int(N))
        object.__setattr__(self, "half_width", float(L))
        object.__setattr__(self, "node_spacing", 2.0 * L / N)
        object.__setattr__(self, "wavenumber_spacing", math.pi / L)

    @property
    def y(self) -> np.ndarray:
        return -self.half_width + self.node_spacing * np.arange(self.num_points)

    @property
    def mode_indices(self) -> np.ndarray:
        N = self.num_points
        return np.arange(-N // 2, N // 2)

    @property
    def k(self) -> np.ndarray:
        return self.wavenumber_spacing * self.mode_indices

    @property
    def k_max(self) -> float:
        """Largest positive wavenumber on the lattice, ``(N/2 - 1) * dk``."""
        return (self.num_points // 2 - 1) * self.wavenumber_spacing

    @property
    def nyquist(self) -> float:
        """Magnitude of the unpaired edge mode, ``N/2 * dk``."""
        return (self.num_points // 2) * self.wavenumber_spacing

    @property
    def spectral_scale(self) -> float:
        """Factor taking a unitary spectrum to one normalized with ``dk`` weights."""
        return math.sqrt(self.node_spacing / self.wavenumber_spacing)

    def mode_index(self, m: int) -> int:
        """Array position of wavenumber node ``m``."""
        N = self.num_points
        if not -N // 2 <= m < N // 2:
            raise IndexError(f"mode {m} outside [{-N // 2}, {N // 2})")
        return m + N // 2

    def periodic_distance(self, y, center: float) -> np.ndarray:
        """Minimum-image distance from ``center`` on the periodic box."""
        d = np.asarray(y, dtype=float) - center
        period = 2.0 * self.half_width
        return np.abs(d - period * np.round(d / period))


def make_grid(L: float, N: int) -> GridSpec:
    return GridSpec(L, N)


def _sign(grid: GridSpec, ndim: int, axis: int) -> np.ndarray:
    # exp(-i k_m y_0) = exp(i m pi) = (-1)^m
    s = np.where(grid.mode_indices % 2 == 0, 1.0, -1.0)
    shape = [1] * ndim
    shape[axis] = grid.num_points
    return s.reshape(shape)


def _check_axis(f: np.ndarray, grid: GridSpec, axis: int) -> int:
    if f.ndim == 0:
        raise ValueError("expected an array, got a scalar")
    axis = axis % f.ndim
    if f.shape[axis] != grid.num_points:
        raise ValueError(f"axis {axis} has length {f.shape[axis]}, grid has {grid.num_points} nodes")
    return axis


def to_spectrum(field, grid: GridSpec, axis: int = -1) -> np.ndarray:
    """Unitary transform from position nodes to wavenumber nodes along ``axis``."""
    f = np.asarray(field, dtype=complex)
    axis = _check_axis(f, grid, axis)
    F = np.fft.fftshift(np.fft.fft(f, axis=axis, norm="ortho"), axes=axis)
    return F * _sign(grid, f.ndim, axis)


def from_spectrum(spectrum, grid: GridSpec, axis: int = -1) -> np.ndarray:
    """Inverse of :func:`to_spectrum`."""
    F = np.asarray(spectrum, dtype=complex)
    axis = _check_axis(F, grid, axis)
    F = np.fft.ifftshift(F * _sign(grid, F.ndim, axis), axes=axis)
    return np.fft.ifft(F, axis=axis, norm="ortho")


def to_spectrum_2d(psi, grid: GridSpec) -> np.ndarray:
    return to_spectrum(to_spectrum(psi, grid, axis=0), grid, axis=1)


def from_spectrum_2d(phi, grid: GridSpec) -> np.ndarray:
    return from_spectrum(from_spectrum(phi, grid, axis=0), grid, axis=1)


def transform_matrix(grid: GridSpec) -> np.ndarray:
    """Dense ``T[m, n] = exp(-i k_m y_n)/sqrt(N)``; O(N^2), meant for checks."""
    return np.exp(-1j * np.outer(grid.k, grid.y)) / math.sqrt(grid.num_points)
