"""Free propagation and local operations acting on particle 1 only.

Particle 2 never feels anything but its free Hamiltonian; every operation
here either multiplies by exact free phases on the particle-2 wavenumber axis
or acts from the left on the particle-1 axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .entangle import BipartiteWave
from .exceptions import NonUnitaryError
from .lattice import GridSpec, from_spectrum_2d, to_spectrum_2d

UNITARY_TOL = 1e-10


@dataclass(frozen=True)
class SlitScreen:
    """Screen potential on ``y1``: zero inside the aperture, ``barrier_height`` outside.

    The transition is a raised cosine of width ``edge_smoothing`` starting at
    the aperture edge, measured with the periodic minimum-image distance.
    """

    center: float
    aperture_half_width: float
    barrier_height: float
    edge_smoothing: float

    def __post_init__(self):
        if self.aperture_half_width < 0:
            raise ValueError("aperture_half_width must be >= 0")
        if not self.barrier_height > 0:
            raise ValueError("barrier_height must be positive")
        if not self.edge_smoothing > 0:
            raise ValueError("edge_smoothing must be positive")

    def profile(self, grid: GridSpec) -> np.ndarray:
        d = grid.periodic_distance(grid.y, self.center) - self.aperture_half_width
        ramp = np.clip(d / self.edge_smoothing, 0.0, 1.0)
        return self.barrier_height * 0.5 * (1.0 - np.cos(np.pi * ramp))

    def as_operation(self, grid: GridSpec) -> "Potential":
        return Potential.static(self.profile(grid))


def default_barrier_height(grid: GridSpec, mass1: float = 1.0, hbar: float = 1.0) -> float:
    """Fifty times the largest kinetic energy the lattice resolves."""
    return 50.0 * (hbar * grid.k_max) ** 2 / (2.0 * mass1)


def default_edge_smoothing(grid: GridSpec) -> float:
    return 4.0 * grid.node_spacing


# -- local operations ---------------------------------------------------------


@dataclass(frozen=True)
class FreeOnly:
    pass


@dataclass(frozen=True)
class Potential:
    """``func(y1_nodes, t) -> energies`` evaluated on the particle-1 nodes."""

    func: Callable[[np.ndarray, float], np.ndarray]

    @classmethod
    def static(cls, values) -> "Potential":
        v = np.array(values, dtype=float)
        v.setflags(write=False)
        return cls(lambda y, t, _v=v: _v)

    def values(self, grid: GridSpec, t: float) -> np.ndarray:
        v = np.asarray(self.func(grid.y, t), dtype=float)
        v = np.broadcast_to(v, (grid.num_points,))
        if not np.all(np.isfinite(v)):
            raise ValueError(f"potential has non-finite values at t={t}")
        return v


@dataclass(frozen=True, eq=False)
class ExplicitUnitary:
    matrix: np.ndarray

    def __post_init__(self):
        U = np.array(self.matrix, dtype=complex)
        check_unitary(U)
        U.setflags(write=False)
        object.__setattr__(self, "matrix", U)


@dataclass(frozen=True)
class Schedule:
    """Piecewise-constant time ordering: ``segments = ((op, duration), ...)``."""

    segments: tuple

    def __post_init__(self):
        segs = tuple((op, float(d)) for op, d in self.segments)
        if not segs:
            raise ValueError("schedule is empty")
        for op, d in segs:
            if not isinstance(op, (FreeOnly, Potential)):
                raise TypeError(f"schedule segments must be FreeOnly or Potential, got {type(op).__name__}")
            if not d > 0:
                raise ValueError(f"segment durations must be positive, got {d}")
        object.__setattr__(self, "segments", segs)

    @property
    def duration(self) -> float:
        return sum(d for _, d in self.segments)


LocalOperation = Union[FreeOnly, Potential, ExplicitUnitary, Schedule]


def make_schedule_slit(grid: GridSpec, widths: Sequence, V0: float, s: float, center: float = 0.0) -> Schedule:
    """Slit whose half-width follows ``widths = [(a_i, duration_i), ...]`` in order."""
    if len(widths) == 0:
        raise ValueError("schedule is empty")
    return Schedule(tuple((SlitScreen(center, a, V0, s).as_operation(grid), d) for a, d in widths))


# -- unitarity ----------------------------------------------------------------


def gram_defect(U: np.ndarray) -> float:
    U = np.asarray(U)
    return float(np.max(np.abs(U.conj().T @ U - np.eye(U.shape[1]))))


def check_unitary(U: np.ndarray, tol: float = UNITARY_TOL) -> None:
    U = np.asarray(U)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {U.shape}")
    defect = gram_defect(U)
    if not defect <= tol:
        raise NonUnitaryError(defect, tol)


def random_unitary(n: int, seed) -> np.ndarray:
    """Haar-distributed unitary from the QR decomposition of a complex Gaussian matrix."""
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


# -- evolution ------------------------------------------------------------------


def _free_phases(state: BipartiteWave, t: float):
    k = state.grid.k
    hb = state.hbar
    p1 = np.exp(-1j * hb * k**2 * t / (2.0 * state.mass1))
    p2 = np.exp(-1j * hb * k**2 * t / (2.0 * state.mass2))
    return p1, p2


def free_propagate(state: BipartiteWave, t: float) -> BipartiteWave:
    """Exact free evolution: diagonal phases in the double-wavenumber basis."""
    if not t >= 0:
        raise ValueError(f"t must be non-negative, got {t}")
    if t == 0:
        return state
    grid = state.grid
    p1, p2 = _free_phases(state, t)
    phi = to_spectrum_2d(state.psi, grid) * p1[:, None] * p2[None, :]
    return state.replace(from_spectrum_2d(phi, grid))


def apply_local_unitary(state: BipartiteWave, U1, check: bool = True) -> BipartiteWave:
    """``psi'(y1, y2) = sum_y1' U1[y1, y1'] psi(y1', y2)``."""
    U1 = np.asarray(U1, dtype=complex)
    N = state.grid.num_points
    if U1.shape != (N, N):
        raise ValueError(f"U1 must have shape ({N}, {N}), got {U1.shape}")
    if check:
        check_unitary(U1)
    return state.replace(U1 @ state.psi)


class _Stepper:
    """Strang steps on the mixed array ``chi[y1, k2]`` (raw FFT order on axis 2).

    Particle 2's free phase commutes with everything acting on axis 1, so it
    is applied once per segment for the segment's whole duration; adjacent
    half-kicks of consecutive steps are merged. Both keep the per-step count
    of rounded multiplications, and hence the drift of column norms, low.
    """

    def __init__(self, state: BipartiteWave):
        grid = state.grid
        self.grid = grid
        self.state = state
        # FFT-order wavenumbers; index N/2 is the Nyquist node -N/2*dk as on the grid
        self.k = 2.0 * np.pi * np.fft.fftfreq(grid.num_points, d=grid.node_spacing)

    def free_phase(self, mass: float, t: float) -> np.ndarray:
        return np.exp(-1j * self.state.hbar * self.k**2 * t / (2.0 * mass))

    def run(self, chi: np.ndarray, pot: Potential | None, t0: float, dt: float, n: int) -> np.ndarray:
        drift = self.free_phase(self.state.mass1, dt)[:, None]
        hbar = self.state.hbar
        # backward normalization: the only scaling is ifft's 1/N, exact for powers of two
        fft, ifft = np.fft.fft, np.fft.ifft
        if pot is None:
            for _ in range(n):
                chi = ifft(drift * fft(chi, axis=0), axis=0)
        else:
            v = pot.values(self.grid, t0 + 0.5 * dt)
            chi = np.exp(-0.5j * v * dt / hbar)[:, None] * chi
            for i in range(n):
                chi = ifft(drift * fft(chi, axis=0), axis=0)
                if i + 1 < n:
                    v_next = pot.values(self.grid, t0 + (i + 1.5) * dt)
                    chi = np.exp(-0.5j * (v + v_next) * dt / hbar)[:, None] * chi
                    v = v_next
            chi = np.exp(-0.5j * v * dt / hbar)[:, None] * chi
        return chi * self.free_phase(self.state.mass2, n * dt)[None, :]


def split_step(state: BipartiteWave, op: LocalOperation, t_total: float | None, n_steps: int) -> BipartiteWave:
    """Strang-split evolution under ``H1(t) + p2^2/2m2``.

    For a :class:`Schedule`, ``t_total`` may be ``None`` (or must equal the
    schedule duration); each segment gets ``round(duration / dt)`` steps with
    ``dt = t_total / n_steps``, at least one.
    """
    if isinstance(n_steps, bool) or int(n_steps) != n_steps or n_steps < 1:
        raise ValueError(f"n_steps must be a positive integer, got {n_steps!r}")
    n_steps = int(n_steps)
    if isinstance(op, ExplicitUnitary):
        raise TypeError("ExplicitUnitary is instantaneous; use apply_local_unitary")
    if isinstance(op, Schedule):
        if t_total is None:
            t_total = op.duration
        elif not math.isclose(t_total, op.duration, rel_tol=1e-12, abs_tol=0.0):
            raise ValueError(f"t_total={t_total} differs from schedule duration {op.duration}")
        segments = op.segments
    elif isinstance(op, (FreeOnly, Potential)):
        if t_total is None:
            raise ValueError("t_total is required for this operation")
        segments = ((op, float(t_total)),)
    else:
        raise TypeError(f"unsupported operation {type(op).__name__}")
    if not t_total >= 0:
        raise ValueError(f"t_total must be non-negative, got {t_total}")
    if t_total == 0:
        return state

    dt_nominal = t_total / n_steps
    stepper = _Stepper(state)
    chi = np.fft.fft(state.psi, axis=1)
    t0 = 0.0
    for seg_op, duration in segments:
        n = n_steps if len(segments) == 1 else max(1, round(duration / dt_nominal))
        pot = seg_op if isinstance(seg_op, Potential) else None
        chi = stepper.run(chi, pot, t0, duration / n, n)
        t0 += duration
    return state.replace(np.fft.ifft(chi, axis=1))


def evolve(state: BipartiteWave, op: LocalOperation, t: float = 0.0, n_steps: int = 1) -> BipartiteWave:
    """Apply any local operation: unitaries instantaneously, the rest for time ``t``."""
    if isinstance(op, ExplicitUnitary):
        return apply_local_unitary(state, op.matrix, check=False)
    if isinstance(op, FreeOnly):
        return free_propagate(state, t)
    if isinstance(op, Schedule):
        return split_step(state, op, None, n_steps)
    return split_step(state, op, t, n_steps)
