"""Spectral components, marginal distributions and distances between them."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .entangle import BipartiteWave, _frozen
from .lattice import GridSpec, to_spectrum_2d


@dataclass(frozen=True, eq=False)
class WavenumberDistribution:
    """Density ``D_m`` over wavenumber nodes with ``sum D_m dk = 1``."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        D = _frozen(self.values, dtype=float)
        if D.shape != (self.grid.num_points,):
            raise ValueError(f"values must have shape ({self.grid.num_points},), got {D.shape}")
        if np.any(D < 0):
            raise ValueError("distribution has negative entries")
        object.__setattr__(self, "values", D)

    @property
    def k(self) -> np.ndarray:
        return self.grid.k

    @property
    def total(self) -> float:
        return float(np.sum(self.values) * self.grid.wavenumber_spacing)

    def mass_outside(self, K: float) -> float:
        out = np.abs(self.grid.k) > K
        return float(np.sum(self.values[out]) * self.grid.wavenumber_spacing)


@dataclass(frozen=True)
class ScreenProfile:
    y: np.ndarray
    density: np.ndarray
    spacing: float


@dataclass(frozen=True)
class DistributionDistance:
    max_abs: float
    total_variation: float


def spectral_components(state: BipartiteWave) -> np.ndarray:
    """``Phi[k1, k2]`` normalized so that ``sum |Phi|^2 dk^2`` equals the state norm."""
    grid = state.grid
    return to_spectrum_2d(state.psi, grid) * grid.spectral_scale**2


def particle2_distribution(state: BipartiteWave) -> WavenumberDistribution:
    phi = spectral_components(state)
    dk = state.grid.wavenumber_spacing
    return WavenumberDistribution(state.grid, np.sum(np.abs(phi) ** 2, axis=0) * dk)


def particle1_distribution(state: BipartiteWave) -> WavenumberDistribution:
    phi = spectral_components(state)
    dk = state.grid.wavenumber_spacing
    return WavenumberDistribution(state.grid, np.sum(np.abs(phi) ** 2, axis=1) * dk)


def position_marginal(state: BipartiteWave, axis: int) -> np.ndarray:
    """Position density of particle ``axis`` (1 or 2), integrating to 1 with ``dy``."""
    if axis not in (1, 2):
        raise ValueError(f"axis must be 1 or 2, got {axis!r}")
    dy = state.grid.node_spacing
    return np.sum(np.abs(state.psi) ** 2, axis=2 - axis) * dy


def column_profiles(state: BipartiteWave) -> np.ndarray:
    """``|Phi(k1, k2)|`` with each ``k2`` column scaled to unit 2-norm.

    Columns with no weight are left as zeros.
    """
    a = np.abs(spectral_components(state))
    norms = np.linalg.norm(a, axis=0)
    out = np.zeros_like(a)
    nz = norms > 0
    out[:, nz] = a[:, nz] / norms[nz]
    return out


def screen_profile(D: WavenumberDistribution, flight_time: float, m2: float = 1.0, hbar: float = 1.0) -> ScreenProfile:
    """Far-field image of ``D`` after free flight: ``y = hbar k T / m2``."""
    if not flight_time > 0:
        raise ValueError(f"flight_time must be positive, got {flight_time}")
    scale = hbar * flight_time / m2
    return ScreenProfile(
        y=D.grid.k * scale,
        density=D.values / scale,
        spacing=D.grid.wavenumber_spacing * scale,
    )


def distribution_distance(Da: WavenumberDistribution, Db: WavenumberDistribution) -> DistributionDistance:
    if Da.grid != Db.grid:
        raise ValueError("distributions live on different grids")
    diff = np.abs(Da.values - Db.values)
    return DistributionDistance(
        max_abs=float(np.max(diff)),
        total_variation=float(0.5 * np.sum(diff) * Da.grid.wavenumber_spacing),
    )


def source_distribution(W) -> WavenumberDistribution:
    """``|W_m|^2``: Bob's distribution at the source, read straight off the amplitude."""
    return WavenumberDistribution(W.grid, np.abs(W.values) ** 2)
