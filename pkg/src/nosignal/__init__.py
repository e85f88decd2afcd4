"""Spectral simulation of an entangled pair behind a slit, with no-signaling checks."""

__version__ = "0.1.0"

from .collapse import (
    CollapseOutcome,
    DiscreteBipartite,
    bob_marginal,
    collapse_on_alice,
    project_aperture,
    sample_joint,
)
from .dynamics import (
    ExplicitUnitary,
    FreeOnly,
    Potential,
    Schedule,
    SlitScreen,
    apply_local_unitary,
    free_propagate,
    make_schedule_slit,
    split_step,
)
from .entangle import BipartiteWave, SpectralAmplitude, build_epr_state, gaussian_band, randomize_phase
from .exceptions import NonUnitaryError, ZeroProbabilityOutcome
from .lattice import GridSpec, from_spectrum, make_grid, to_spectrum
from .marginals import (
    WavenumberDistribution,
    distribution_distance,
    particle2_distribution,
    position_marginal,
    screen_profile,
    source_distribution,
    spectral_components,
)
from .verifier import Aperture, Scenario, compare, default_suite, run_scenario
