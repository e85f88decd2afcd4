"""Projective measurement by Alice on finite bipartite states and on lattice states."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .entangle import BipartiteWave, _frozen
from .exceptions import ZeroProbabilityOutcome

NORM_TOL = 1e-12
ZERO_PROBABILITY = 1e-15


@dataclass(frozen=True, eq=False)
class DiscreteBipartite:
    """``Psi = sum_ij a[i, j] alpha_i beta_j`` with Alice on rows and Bob on columns."""

    coefficients: np.ndarray

    def __post_init__(self):
        a = _frozen(self.coefficients)
        if a.ndim != 2 or 0 in a.shape:
            raise ValueError(f"coefficients must be a non-empty matrix, got shape {a.shape}")
        total = float(np.sum(np.abs(a) ** 2))
        if abs(total - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized: sum |a_ij|^2 = {total!r}")
        object.__setattr__(self, "coefficients", a)

    @property
    def shape(self) -> tuple:
        return self.coefficients.shape

    @property
    def joint(self) -> np.ndarray:
        return np.abs(self.coefficients) ** 2

    @classmethod
    def random(cls, d1: int, d2: int, seed) -> "DiscreteBipartite":
        rng = np.random.default_rng(seed)
        a = rng.standard_normal((d1, d2)) + 1j * rng.standard_normal((d1, d2))
        return cls(a / np.linalg.norm(a))

    @classmethod
    def product(cls, b, c) -> "DiscreteBipartite":
        return cls(np.outer(b, c))


@dataclass(frozen=True)
class CollapseOutcome:
    outcome_index: int
    probability: float
    post_state: DiscreteBipartite

    @property
    def bob_conditional(self) -> np.ndarray:
        return bob_marginal(self.post_state)


def alice_marginal(state: DiscreteBipartite) -> np.ndarray:
    return np.sum(state.joint, axis=1)


def bob_marginal(state: DiscreteBipartite) -> np.ndarray:
    return np.sum(state.joint, axis=0)


def bob_conditional(state: DiscreteBipartite, i: int) -> np.ndarray:
    """Bob's distribution given Alice found outcome ``i``."""
    row = state.joint[i]
    total = row.sum()
    if total <= ZERO_PROBABILITY:
        raise ZeroProbabilityOutcome(total)
    return row / total


def collapse_on_alice(state: DiscreteBipartite, i: int) -> CollapseOutcome:
    """Keep row ``i`` of the coefficients and renormalize (Born rule)."""
    d1 = state.shape[0]
    if not 0 <= i < d1:
        raise IndexError(f"outcome {i} outside 0..{d1 - 1}")
    a = state.coefficients
    p = float(np.sum(np.abs(a[i]) ** 2))
    if p <= ZERO_PROBABILITY:
        raise ZeroProbabilityOutcome(p)
    post = np.zeros_like(a)
    post[i] = a[i] / np.sqrt(p)
    return CollapseOutcome(i, p, DiscreteBipartite(post))


def averaged_bob_after_alice(state: DiscreteBipartite) -> np.ndarray:
    """``sum_i rho1_i * rho2_{j|i}`` over outcomes Alice can actually obtain."""
    out = np.zeros(state.shape[1])
    for i in range(state.shape[0]):
        try:
            o = collapse_on_alice(state, i)
        except ZeroProbabilityOutcome:
            continue
        out += o.probability * o.bob_conditional
    return out


def sample_joint(state: DiscreteBipartite, seed, n_pairs: int) -> np.ndarray:
    """Counts of ``(i, j)`` outcomes over ``n_pairs`` independent pairs."""
    if n_pairs < 1:
        raise ValueError(f"n_pairs must be >= 1, got {n_pairs}")
    rng = np.random.default_rng(seed)
    p = state.joint.ravel()
    counts = rng.multinomial(n_pairs, p / p.sum())
    return counts.reshape(state.shape)


# -- lattice states -----------------------------------------------------------


def aperture_region(grid, center: float, half_width: float) -> np.ndarray:
    """Boolean mask of ``y1`` nodes with periodic distance to ``center`` at most ``half_width``."""
    return grid.periodic_distance(grid.y, center) <= half_width + 1e-12 * grid.node_spacing


def _as_mask(region, n: int) -> np.ndarray:
    region = np.asarray(region)
    if region.dtype == bool:
        if region.shape != (n,):
            raise ValueError(f"region mask must have shape ({n},)")
        return region
    mask = np.zeros(n, dtype=bool)
    mask[region.astype(int)] = True
    return mask


def project_aperture(state: BipartiteWave, region) -> tuple[float, BipartiteWave]:
    """Alice finds particle 1 on ``region`` (mask or node indices): probability and collapsed state."""
    N = state.grid.num_points
    mask = _as_mask(region, N)
    if not mask.any():
        raise ValueError("region is empty")
    kept = np.where(mask[:, None], state.psi, 0.0)
    p = float(np.sum(np.abs(kept) ** 2) * state.grid.node_spacing**2)
    if p <= ZERO_PROBABILITY:
        raise ZeroProbabilityOutcome(p)
    return p, state.replace(kept / np.sqrt(p))
