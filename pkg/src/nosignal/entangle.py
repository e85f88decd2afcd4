"""Band-limited source amplitudes and the box-normalized entangled pair state."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import GridSpec, from_spectrum_2d

NORM_TOL = 1e-10


def _frozen(a, dtype=complex) -> np.ndarray:
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SpectralAmplitude:
    """Source amplitude ``W_m`` on the wavenumber nodes of ``grid``.

    ``values`` are normalized so that ``sum |W_m|^2 dk = 1`` and vanish
    outside ``|k_m| <= band_limit``.
    """

    grid: GridSpec
    values: np.ndarray
    band_limit: float

    def __post_init__(self):
        W = _frozen(self.values)
        if W.shape != (self.grid.num_points,):
            raise ValueError(f"values must have shape ({self.grid.num_points},), got {W.shape}")
        if not np.all(np.isfinite(W)):
            raise ValueError("values must be finite")
        if self.band_limit <= 0:
            raise ValueError("band_limit must be positive")
        outside = np.abs(self.grid.k) > self.band_limit
        if np.any(W[outside] != 0):
            raise ValueError("amplitude has support outside the band limit")
        object.__setattr__(self, "values", W)
        object.__setattr__(self, "band_limit", float(self.band_limit))

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.wavenumber_spacing)

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    @classmethod
    def from_unnormalized(cls, grid: GridSpec, values, band_limit: float) -> "SpectralAmplitude":
        """Zero ``values`` outside the band, then rescale to unit norm."""
        W = np.array(values, dtype=complex)
        W[np.abs(grid.k) > band_limit] = 0.0
        total = np.sum(np.abs(W) ** 2) * grid.wavenumber_spacing
        if total <= 0:
            raise ValueError("amplitude vanishes on the band")
        return cls(grid, W / np.sqrt(total), band_limit)


def gaussian_band(grid: GridSpec, sigma_k: float, K_cut: float) -> SpectralAmplitude:
    """Gaussian envelope ``exp(-k^2 / 2 sigma_k^2)`` truncated at ``|k| <= K_cut``."""
    if sigma_k <= 0:
        raise ValueError(f"sigma_k must be positive, got {sigma_k}")
    if not 0 < K_cut < grid.nyquist:
        raise ValueError(f"K_cut={K_cut} must lie in (0, {grid.nyquist}) for this grid")
    k = grid.k
    W = np.exp(-(k**2) / (2.0 * sigma_k**2))
    return SpectralAmplitude.from_unnormalized(grid, W, K_cut)


def randomize_phase(W: SpectralAmplitude, seed: int) -> SpectralAmplitude:
    """Multiply every node by an independent uniform random phase."""
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.0, 2.0 * np.pi, size=W.grid.num_points)
    values = np.abs(W.values) * np.exp(1j * (np.angle(W.values) + theta))
    values[W.values == 0] = 0.0
    return SpectralAmplitude(W.grid, values, W.band_limit)


@dataclass(frozen=True, eq=False)
class BipartiteWave:
    """Two-particle amplitude ``psi[n1, n2]`` on the product lattice."""

    grid: GridSpec
    psi: np.ndarray
    mass1: float = 1.0
    mass2: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        N = self.grid.num_points
        psi = _frozen(self.psi)
        if psi.shape != (N, N):
            raise ValueError(f"psi must have shape ({N}, {N}), got {psi.shape}")
        for name in ("mass1", "mass2", "hbar"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        object.__setattr__(self, "psi", psi)

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.psi) ** 2) * self.grid.node_spacing**2)

    def replace(self, psi) -> "BipartiteWave":
        return BipartiteWave(self.grid, psi, self.mass1, self.mass2, self.hbar)


def build_epr_state(W: SpectralAmplitude, m1: float = 1.0, m2: float = 1.0, hbar: float = 1.0) -> BipartiteWave:
    """Pair state ``sum_m W_m exp(-i k_m y1) exp(+i k_m y2)``, box-normalized.

    The amplitude is assembled in the double-wavenumber representation (node
    ``(-m, m)`` carries ``W_m``) and brought to positions by the unitary
    transform, so the result depends on ``y1 - y2`` only.
    """
    if abs(W.norm - 1.0) > NORM_TOL:
        raise ValueError(f"source amplitude is not normalized (sum |W|^2 dk = {W.norm!r})")
    grid = W.grid
    N = grid.num_points
    if W.values[0] != 0:
        # node -N/2 has no partner +N/2 on the lattice
        raise ValueError("source amplitude must vanish on the Nyquist node")
    phi = np.zeros((N, N), dtype=complex)
    j = np.arange(1, N)
    phi[N - j, j] = W.values[j]
    psi = from_spectrum_2d(phi, grid)
    psi /= np.sqrt(np.sum(np.abs(psi) ** 2) * grid.node_spacing**2)
    return BipartiteWave(grid, psi, m1, m2, hbar)
