import json

import numpy as np
import pytest

from nosignal.dynamics import FreeOnly
from nosignal.entangle import gaussian_band
from nosignal.verifier import (
    Aperture,
    ComparisonRecord,
    Scenario,
    averaged_post_measurement,
    bandwidth_check,
    build_source,
    compare,
    conditional_distribution,
    default_suite,
    run_scenario,
    slit_width_sweep,
)
from nosignal.marginals import distribution_distance, particle2_distribution, source_distribution

SMALL = Scenario(grid_n=64, n_steps=100)


def slit_scenario(base, a):
    return base.replace(operation=base.slit(a).as_operation(base.grid), name=f"slit {a}")


def test_free_zero_time_scenario_is_source():
    s = SMALL.replace(t_pre=0.0, t_op=0.0, t_post=0.0)
    _, D = run_scenario(s)
    W = gaussian_band(s.grid, s.sigma_k, s.k_cut)
    np.testing.assert_allclose(D.values, np.abs(W.values) ** 2, atol=1e-12)


def test_runs_are_bitwise_deterministic():
    s = slit_scenario(SMALL.replace(phase_seed=4), 0.5)
    np.testing.assert_array_equal(run_scenario(s)[1].values, run_scenario(s)[1].values)


def test_slit_scenario_at_256_equals_source():
    base = Scenario()
    s = slit_scenario(base, 4 * base.grid.node_spacing)
    _, D = run_scenario(s)
    np.testing.assert_allclose(D.values, particle2_distribution(build_source(base)).values, atol=1e-12)


def test_compare_identical_and_slit():
    same = compare(SMALL, SMALL)
    assert same.max_abs == 0 and same.total_variation == 0 and same.passed
    rec = compare(SMALL, slit_scenario(SMALL, 0.5))
    assert rec.max_abs <= 1e-12 and rec.passed


def test_compare_rejects_mismatches():
    with pytest.raises(ValueError, match="grid"):
        compare(SMALL, SMALL.replace(grid_n=128))
    with pytest.raises(ValueError, match="source"):
        compare(SMALL, SMALL.replace(sigma_k=1.0))


def test_negative_control_modified_source_fails():
    rec = compare(SMALL, SMALL.replace(sigma_k=0.75), allow_source_mismatch=True)
    assert rec.max_abs > 1e-3
    assert not rec.passed


def test_verdict_is_computed():
    rec = ComparisonRecord("a", "b", 2e-12, 0.0, 1e-12)
    assert not rec.passed
    assert rec.as_dict()["passed"] is False


def test_averaged_measurement():
    g = SMALL.grid
    slit = slit_scenario(SMALL, 0.5)
    _, D_unmeasured = run_scenario(slit)
    full = slit.replace(aperture=Aperture(0.0, 2 * g.half_width))
    np.testing.assert_allclose(averaged_post_measurement(full).values, D_unmeasured.values, atol=1e-12)
    half = slit.replace(aperture=Aperture(g.half_width / 2, g.half_width / 2))
    np.testing.assert_allclose(averaged_post_measurement(half).values, D_unmeasured.values, atol=1e-12)
    with pytest.raises(ValueError):
        averaged_post_measurement(slit)


def test_conditional_differs_at_256():
    base = Scenario()
    dy = base.grid.node_spacing
    s = slit_scenario(base, 4 * dy).replace(aperture=Aperture(0.0, 4 * dy))
    cond = conditional_distribution(s)
    _, D = run_scenario(s.replace(aperture=None))
    assert distribution_distance(cond, D).total_variation > 0.01
    np.testing.assert_allclose(run_scenario(s)[1].values, D.values, atol=1e-12)


def test_bandwidth_check():
    W = gaussian_band(SMALL.grid, SMALL.sigma_k, SMALL.k_cut)
    assert bandwidth_check(source_distribution(W), SMALL.k_cut).mass_outside == 0.0
    _, D = run_scenario(slit_scenario(SMALL, 0.5))
    rec = bandwidth_check(D, SMALL.k_cut)
    assert rec.mass_outside <= 1e-10 and rec.passed
    exempt = bandwidth_check(D, SMALL.k_cut, None)
    assert exempt.passed is None
    with pytest.raises(ValueError):
        bandwidth_check(D, 1e6)


def test_sweep():
    dy = SMALL.grid.node_spacing
    rows = slit_width_sweep(SMALL, [8 * dy, 4 * dy, 2 * dy])
    assert len(rows) == 3
    assert all(r.marginal_maxabs <= 1e-12 and r.passed for r in rows)
    assert rows[0].conditional_tv == 0.0
    assert rows[1].conditional_tv > 0.01
    single = slit_width_sweep(SMALL, [4 * dy])
    assert len(single) == 1 and single[0].marginal_maxabs is None and single[0].passed is None
    with pytest.raises(ValueError):
        slit_width_sweep(SMALL, [])


def test_default_suite_small_grid():
    report = default_suite(SMALL, n_unitaries=5)
    assert report.passed, "\n".join(report.summary_lines())
    json.dumps(report.as_dict())
    assert sum(c.variant.startswith("unitary") for c in report.comparisons) == 5


def test_default_suite_detects_injected_fault():
    report = default_suite(SMALL, n_unitaries=3, inject_fault=True)
    assert not report.passed
    bad = [c for c in report.comparisons if not c.passed]
    assert [c.variant for c in bad] == ["unitary[0]"]
    assert bad[0].max_abs > 1e-3
