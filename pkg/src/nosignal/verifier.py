"""Scenario runs and the no-signaling comparisons built on them.

A :class:`Scenario` is the whole experiment for one setting of Alice's
controls: build the source, fly freely, apply the local operation at the
slit, fly freely again, and optionally let Alice detect particle 1 in an
aperture. Every verdict in a report is a property computed from stored
distances, never a stored boolean.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import __version__
from .collapse import aperture_region, project_aperture
from .dynamics import (
    FreeOnly,
    LocalOperation,
    SlitScreen,
    apply_local_unitary,
    default_barrier_height,
    default_edge_smoothing,
    evolve,
    free_propagate,
    make_schedule_slit,
    random_unitary,
)
from .entangle import BipartiteWave, build_epr_state, gaussian_band, randomize_phase
from .exceptions import NonUnitaryError, ZeroProbabilityOutcome
from .lattice import GridSpec, make_grid
from .marginals import (
    WavenumberDistribution,
    distribution_distance,
    particle2_distribution,
    position_marginal,
)

NO_SIGNAL_TOL = 1e-12
BANDWIDTH_TOL = 1e-10
CONDITIONAL_TV_MIN = 0.01
RESHAPE_TV_MIN = 0.1


@dataclass(frozen=True)
class Aperture:
    center: float
    half_width: float


@dataclass(frozen=True)
class Scenario:
    grid_l: float = 8.0
    grid_n: int = 256
    sigma_k: float = 0.5
    k_cut: float = 1.5
    phase_seed: Optional[int] = None
    mass1: float = 1.0
    mass2: float = 1.0
    hbar: float = 1.0
    t_pre: float = 1.0
    operation: LocalOperation = field(default_factory=FreeOnly)
    t_op: float = 2.0
    n_steps: int = 400
    t_post: float = 2.0
    aperture: Optional[Aperture] = None
    name: str = "scenario"

    @property
    def grid(self) -> GridSpec:
        return make_grid(self.grid_l, self.grid_n)

    def source_key(self) -> tuple:
        return (self.grid_l, self.grid_n, self.sigma_k, self.k_cut, self.phase_seed,
                self.mass1, self.mass2, self.hbar)

    def replace(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)

    def slit(self, half_width: float, center: float = 0.0, V0: float | None = None, s: float | None = None) -> SlitScreen:
        """Slit screen on this scenario's grid with the package defaults filled in."""
        g = self.grid
        if V0 is None:
            V0 = default_barrier_height(g, self.mass1, self.hbar)
        if s is None:
            s = default_edge_smoothing(g)
        return SlitScreen(center, half_width, V0, s)


def build_source(s: Scenario) -> BipartiteWave:
    W = gaussian_band(s.grid, s.sigma_k, s.k_cut)
    if s.phase_seed is not None:
        W = randomize_phase(W, s.phase_seed)
    return build_epr_state(W, s.mass1, s.mass2, s.hbar)


def evolve_scenario(s: Scenario) -> BipartiteWave:
    """Final state before any measurement by Alice."""
    state = free_propagate(build_source(s), s.t_pre)
    state = evolve(state, s.operation, s.t_op, s.n_steps)
    return free_propagate(state, s.t_post)


@dataclass(frozen=True)
class MeasurementBranches:
    """Bob's distribution in each of Alice's two aperture outcomes."""

    p_inside: float
    inside: Optional[WavenumberDistribution]
    outside: Optional[WavenumberDistribution]

    def average(self) -> WavenumberDistribution:
        if self.inside is None:
            return self.outside
        if self.outside is None:
            return self.inside
        p = self.p_inside
        return WavenumberDistribution(self.inside.grid, p * self.inside.values + (1.0 - p) * self.outside.values)


def measurement_branches(state: BipartiteWave, aperture: Aperture) -> MeasurementBranches:
    mask = aperture_region(state.grid, aperture.center, aperture.half_width)
    branches = {}
    probs = {}
    for key, region in (("inside", mask), ("outside", ~mask)):
        if not region.any():
            branches[key] = None
            probs[key] = 0.0
            continue
        try:
            p, post = project_aperture(state, region)
        except ZeroProbabilityOutcome:
            branches[key] = None
            probs[key] = 0.0
            continue
        branches[key] = particle2_distribution(post)
        probs[key] = p
    if branches["inside"] is None and branches["outside"] is None:
        raise ZeroProbabilityOutcome(0.0)
    # p_inside from the inside branch alone; 1 - p_inside weights the other
    return MeasurementBranches(probs["inside"], branches["inside"], branches["outside"])


def run_scenario(s: Scenario) -> tuple[BipartiteWave, WavenumberDistribution]:
    """Final (unmeasured) state and Bob's distribution, outcome-averaged if Alice measures."""
    state = evolve_scenario(s)
    if s.aperture is None:
        return state, particle2_distribution(state)
    return state, measurement_branches(state, s.aperture).average()


def averaged_post_measurement(s: Scenario) -> WavenumberDistribution:
    if s.aperture is None:
        raise ValueError("scenario has no aperture measurement")
    return measurement_branches(evolve_scenario(s), s.aperture).average()


def conditional_distribution(s: Scenario) -> WavenumberDistribution:
    """Bob's distribution in coincidence with particle 1 found inside the aperture."""
    if s.aperture is None:
        raise ValueError("scenario has no aperture measurement")
    branches = measurement_branches(evolve_scenario(s), s.aperture)
    if branches.inside is None:
        raise ZeroProbabilityOutcome(0.0)
    return branches.inside


# -- records ----------------------------------------------------------------------


@dataclass(frozen=True)
class ComparisonRecord:
    baseline: str
    variant: str
    max_abs: float
    total_variation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_abs <= self.tolerance

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["passed"] = self.passed
        return d


@dataclass(frozen=True)
class BandwidthRecord:
    label: str
    k_cut: float
    mass_outside: float
    tolerance: Optional[float]

    @property
    def passed(self) -> Optional[bool]:
        """``None`` for exempt (conditional) distributions."""
        if self.tolerance is None:
            return None
        return self.mass_outside <= self.tolerance

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["passed"] = self.passed
        return d


@dataclass(frozen=True)
class ThresholdRecord:
    """A quantity that must exceed ``minimum`` (demonstrations and negative controls)."""

    label: str
    value: float
    minimum: float

    @property
    def passed(self) -> bool:
        return self.value > self.minimum

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["passed"] = self.passed
        return d


@dataclass(frozen=True)
class SweepRow:
    width: float
    marginal_maxabs: Optional[float]
    marginal_tv: Optional[float]
    conditional_tv: Optional[float]
    tolerance: float

    @property
    def passed(self) -> Optional[bool]:
        if self.marginal_maxabs is None:
            return None
        return self.marginal_maxabs <= self.tolerance

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["passed"] = self.passed
        return d


def _check_compatible(a: Scenario, b: Scenario, allow_source_mismatch: bool) -> None:
    if (a.grid_l, a.grid_n) != (b.grid_l, b.grid_n):
        raise ValueError(f"grid mismatch between {a.name!r} and {b.name!r}")
    if not allow_source_mismatch and a.source_key() != b.source_key():
        raise ValueError(f"source mismatch between {a.name!r} and {b.name!r}")


def compare(baseline: Scenario, variant: Scenario, tol: float = NO_SIGNAL_TOL,
            allow_source_mismatch: bool = False) -> ComparisonRecord:
    """Distances between Bob's distributions in two scenarios.

    Scenarios must share grid and source unless ``allow_source_mismatch`` is
    set, which exists for negative controls.
    """
    _check_compatible(baseline, variant, allow_source_mismatch)
    _, Da = run_scenario(baseline)
    _, Db = run_scenario(variant)
    return compare_distributions(Da, Db, baseline.name, variant.name, tol)


def compare_distributions(Da, Db, name_a: str, name_b: str, tol: float = NO_SIGNAL_TOL) -> ComparisonRecord:
    d = distribution_distance(Da, Db)
    return ComparisonRecord(name_a, name_b, d.max_abs, d.total_variation, tol)


def bandwidth_check(D: WavenumberDistribution, K_cut: float, tol: Optional[float] = BANDWIDTH_TOL,
                    label: str = "bandwidth") -> BandwidthRecord:
    if not 0 < K_cut < D.grid.nyquist:
        raise ValueError(f"K_cut={K_cut} outside the grid band")
    return BandwidthRecord(label, K_cut, D.mass_outside(K_cut), tol)


def slit_width_sweep(base: Scenario, widths, tol: float = NO_SIGNAL_TOL, center: float = 0.0) -> list[SweepRow]:
    """Widen and narrow the slit; Bob's marginal must not move, his coincidences may.

    The marginal of each width is compared with the free-flight baseline; the
    conditional (particle 1 found inside the slit) is compared with that of
    the widest slit. A single width yields one row with empty comparisons.
    """
    widths = [float(w) for w in widths]
    if not widths:
        raise ValueError("no widths given")
    free = base.replace(operation=FreeOnly(), aperture=None, name="free")
    _, D_free = run_scenario(free)

    def conditional_for(a):
        s = base.replace(operation=base.slit(a, center).as_operation(base.grid), aperture=Aperture(center, a),
                         name=f"slit a={a!r}")
        state = evolve_scenario(s)
        return particle2_distribution(state), measurement_branches(state, s.aperture).inside

    results = {a: conditional_for(a) for a in sorted(set(widths))}
    if len(widths) == 1:
        return [SweepRow(widths[0], None, None, None, tol)]
    widest = results[max(widths)][1]
    rows = []
    for a in widths:
        D, cond = results[a]
        d = distribution_distance(D_free, D)
        ctv = None if cond is None or widest is None else distribution_distance(widest, cond).total_variation
        rows.append(SweepRow(a, d.max_abs, d.total_variation, ctv, tol))
    return rows


def reshaping_tv(base: Scenario, variant: Scenario) -> float:
    """TV distance between particle-1 position marginals of two scenarios (no measurement)."""
    ra = position_marginal(evolve_scenario(base.replace(aperture=None)), 1)
    rb = position_marginal(evolve_scenario(variant.replace(aperture=None)), 1)
    return float(0.5 * np.sum(np.abs(ra - rb)) * base.grid.node_spacing)


# -- default suite ----------------------------------------------------------------


@dataclass
class NoSignalReport:
    comparisons: list = field(default_factory=list)
    bandwidth: list = field(default_factory=list)
    thresholds: list = field(default_factory=list)
    sweep: list = field(default_factory=list)
    errors: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def records(self):
        yield from self.comparisons
        yield from (b for b in self.bandwidth if b.passed is not None)
        yield from self.thresholds
        yield from (r for r in self.sweep if r.passed is not None)

    @property
    def passed(self) -> bool:
        return not self.errors and all(r.passed for r in self.records())

    def summary_lines(self) -> list[str]:
        lines = []
        for c in self.comparisons:
            lines.append(f"{'PASS' if c.passed else 'FAIL'}  no-signal {c.variant} vs {c.baseline}: "
                         f"max_abs={c.max_abs:.3e} tv={c.total_variation:.3e} tol={c.tolerance:.0e}")
        for b in self.bandwidth:
            tag = {True: "PASS", False: "FAIL", None: "INFO"}[b.passed]
            lines.append(f"{tag}  bandwidth {b.label}: mass(|k2|>{b.k_cut:g})={b.mass_outside:.3e}")
        for t in self.thresholds:
            lines.append(f"{'PASS' if t.passed else 'FAIL'}  {t.label}: {t.value:.4g} > {t.minimum:g}")
        for r in self.sweep:
            if r.passed is None:
                continue
            ctv = "n/a" if r.conditional_tv is None else f"{r.conditional_tv:.4g}"
            lines.append(f"{'PASS' if r.passed else 'FAIL'}  sweep width={r.width:.6g}: "
                         f"marginal max_abs={r.marginal_maxabs:.3e} conditional_tv={ctv}")
        for e in self.errors:
            lines.append(f"FAIL  error {e}")
        return lines

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "comparisons": [c.as_dict() for c in self.comparisons],
            "bandwidth": [b.as_dict() for b in self.bandwidth],
            "thresholds": [t.as_dict() for t in self.thresholds],
            "sweep": [r.as_dict() for r in self.sweep],
            "errors": list(self.errors),
            "metadata": self.metadata,
        }


def default_suite(base: Scenario | None = None, seed: int = 0, n_unitaries: int = 50,
                  tol: float = NO_SIGNAL_TOL, inject_fault: bool = False) -> NoSignalReport:
    """Free flight, random unitaries, three slit widths, one schedule, one measurement average,
    bandwidth checks and negative controls.

    ``inject_fault`` swaps one random unitary for an unchecked non-unitary
    matrix; the suite must then fail.
    """
    base = base or Scenario()
    g = base.grid
    dy = g.node_spacing
    report = NoSignalReport()
    report.metadata = {"seed": seed, "n_unitaries": n_unitaries, "tolerance": tol,
                       "grid_l": base.grid_l, "grid_n": base.grid_n, "version": __version__}

    free = base.replace(operation=FreeOnly(), aperture=None, name="free")
    _, D_free = run_scenario(free)
    source = build_source(base)
    D_source = particle2_distribution(source)
    report.comparisons.append(compare_distributions(D_source, D_free, "source", "free", tol))

    rng = np.random.default_rng(seed)
    unitary_seeds = rng.integers(0, 2**63 - 1, size=n_unitaries)
    state_free_pre = free_propagate(source, base.t_pre)
    for idx, useed in enumerate(unitary_seeds):
        U = random_unitary(g.num_points, int(useed))
        if inject_fault and idx == 0:
            U = U * np.linspace(0.5, 1.5, g.num_points)[None, :]
            state = apply_local_unitary(state_free_pre, U, check=False)
        else:
            state = apply_local_unitary(state_free_pre, U)
        state = free_propagate(state, base.t_op + base.t_post)
        report.comparisons.append(
            compare_distributions(D_free, particle2_distribution(state), "free", f"unitary[{idx}]", tol))

    widths = [8 * dy, 4 * dy, 2 * dy]
    for a in widths:
        s = base.replace(operation=base.slit(a).as_operation(g), aperture=None, name=f"slit a={a / dy:g}dy")
        state, D = run_scenario(s)
        report.comparisons.append(compare_distributions(D_free, D, "free", s.name, tol))
        report.bandwidth.append(bandwidth_check(D, base.k_cut, BANDWIDTH_TOL, label=s.name))
        rtv = 0.5 * np.sum(np.abs(position_marginal(state, 1) - position_marginal(evolve_scenario(free), 1))) * dy
        report.thresholds.append(ThresholdRecord(f"particle-1 reshaping tv ({s.name})", float(rtv), RESHAPE_TV_MIN))

    half = base.t_op / 4
    sched_op = make_schedule_slit(g, [(8 * dy, half), (2 * dy, half), (8 * dy, half), (2 * dy, half)],
                                  default_barrier_height(g, base.mass1, base.hbar), default_edge_smoothing(g))
    sched = base.replace(operation=sched_op, aperture=None, name="schedule wide/narrow")
    _, D_sched = run_scenario(sched)
    report.comparisons.append(compare_distributions(D_free, D_sched, "free", sched.name, tol))

    a_meas = 4 * dy
    measured = base.replace(operation=base.slit(a_meas).as_operation(g), aperture=Aperture(0.0, a_meas),
                            name="slit+aperture average")
    state = evolve_scenario(measured)
    branches = measurement_branches(state, measured.aperture)
    report.comparisons.append(compare_distributions(D_free, branches.average(), "free", measured.name, tol))
    report.bandwidth.append(bandwidth_check(branches.average(), base.k_cut, BANDWIDTH_TOL, label="averaged"))
    report.bandwidth.append(bandwidth_check(branches.inside, base.k_cut, None, label="conditional (exempt)"))
    cond_tv = distribution_distance(branches.inside, D_free).total_variation
    report.thresholds.append(ThresholdRecord("conditional vs unconditional tv", cond_tv, CONDITIONAL_TV_MIN))

    report.sweep = slit_width_sweep(base, widths, tol)
    w0, w1 = report.sweep[0], report.sweep[1]
    report.thresholds.append(ThresholdRecord(
        f"sweep conditional tv (a={w1.width / dy:g}dy vs {w0.width / dy:g}dy)", w1.conditional_tv, CONDITIONAL_TV_MIN))

    # Negative controls: each must be caught.
    bad = np.eye(g.num_points, dtype=complex)
    bad[0, 0] = 1.0 + 1e-3
    try:
        apply_local_unitary(source, bad)
    except NonUnitaryError as exc:
        report.thresholds.append(ThresholdRecord("negative control: non-unitary rejected (gram defect)",
                                                 exc.defect, exc.tol))
    else:
        report.errors.append("non-unitary operation was accepted")
    other = free.replace(sigma_k=base.sigma_k * 1.5, name="free (modified source)")
    neg = compare(free, other, tol, allow_source_mismatch=True)
    report.thresholds.append(ThresholdRecord("negative control: modified source detected (max_abs)",
                                             neg.max_abs, 1e-3))
    if neg.passed:
        report.errors.append("modified source passed the no-signal comparison")
    return report

