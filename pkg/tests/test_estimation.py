"""Grid posterior: priors, updates against a brute-force oracle, MLE
behavior, and the angle helpers."""

import math

import numpy as np
import pytest

from peamag.estimation import (
    EstimateStats,
    LikelihoodGrid,
    bayes_update,
    export_grid_csv,
    mle,
    phase_variance,
    to_field,
    uniform_prior,
    wrap_angle,
)


def test_wrap_angle_convention():
    assert wrap_angle(math.pi) == pytest.approx(math.pi)
    assert wrap_angle(-math.pi) == pytest.approx(math.pi)
    assert wrap_angle(1.5 * math.pi) == pytest.approx(-0.5 * math.pi)
    assert wrap_angle(0.25) == pytest.approx(0.25)
    arr = wrap_angle(np.array([0.0, 2 * math.pi, -3 * math.pi]))
    assert arr == pytest.approx([0.0, 0.0, math.pi])


def test_uniform_prior_layout():
    grid = uniform_prior(8)
    assert grid.n_points == 8
    assert grid.cell == pytest.approx(2 * math.pi / 8)
    # cell-centered: first point half a cell above -pi
    assert grid.phis[0] == pytest.approx(-math.pi + math.pi / 8)
    assert grid.total_mass() == pytest.approx(1.0, rel=1e-12)
    assert grid.entropy() == pytest.approx(math.log(2 * math.pi), rel=1e-12)


def test_uniform_prior_rejects_tiny_grid():
    with pytest.raises(ValueError):
        uniform_prior(1)


def test_bayes_update_matches_brute_force_product():
    rng = np.random.default_rng(7)
    grid = uniform_prior(512)
    t_min = 20e-9
    t2 = 1200e-9
    factors = np.ones(512)
    for _ in range(25):
        u = int(rng.integers(0, 2))
        k = int(rng.integers(1, 7))
        phi_c = float(rng.uniform(-math.pi, math.pi))
        t_k = 2 ** (k - 1) * t_min
        grid = bayes_update(grid, u, k, phi_c, t_k, t2)
        d = math.exp(-((t_k / t2) ** 2))
        sign = 1.0 if u == 0 else -1.0
        factors = factors * 0.5 * (1 + sign * d * np.cos(2 ** (k - 1) * grid.phis - phi_c))
    expected = factors / (factors.sum() * grid.cell)
    assert np.abs(grid.density - expected).max() < 1e-9 * expected.max()


def test_bayes_update_validates_inputs():
    grid = uniform_prior(16)
    with pytest.raises(ValueError):
        bayes_update(grid, 2, 1, 0.0, 1e-8)
    with pytest.raises(ValueError):
        bayes_update(grid, 0, 0, 0.0, 1e-8)
    with pytest.raises(ValueError):
        bayes_update(grid, 0, 1, 0.0, -1e-8)


def test_update_survives_zero_probability_bit():
    # deterministic likelihood with an exact zero must not produce NaN
    grid = uniform_prior(64)
    grid = bayes_update(grid, 0, 1, 0.0, 0.0)  # D = 1, P0 = (1+cos)/2
    grid = bayes_update(grid, 1, 1, 0.0, 0.0)
    assert np.isfinite(grid.log_density).all()
    assert grid.total_mass() == pytest.approx(1.0, rel=1e-9)


def test_mle_finds_injected_peak():
    n = 1024
    grid = uniform_prior(n)
    center = 0.8137
    log_density = -0.5 * (wrap_angle(grid.phis - center) / 0.05) ** 2
    bumped = LikelihoodGrid(phis=grid.phis, log_density=log_density)
    est = mle(bumped)
    assert abs(wrap_angle(est.phi - center)) < 2 * math.pi / n
    assert not est.degenerate
    refined = mle(bumped, refine=True)
    assert abs(wrap_angle(refined.phi - center)) <= abs(wrap_angle(est.phi - center))


def test_mle_flat_grid_is_degenerate_lowest_index():
    grid = uniform_prior(32)
    est = mle(grid)
    assert est.degenerate
    assert est.index == 0


def test_phase_variance_wraps():
    samples = np.array([math.pi - 0.01, -math.pi + 0.01])
    # both are 0.01 away from pi once wrapped
    assert phase_variance(samples, math.pi) == pytest.approx(1e-4, rel=1e-9)


def test_to_field_round_trip():
    from peamag.constants import GAMMA_E
    t_min = 20e-9
    b = 37.5e-6
    assert to_field(GAMMA_E * b * t_min, t_min) == pytest.approx(b, rel=1e-12)


def test_estimate_stats_circular_mean():
    phis = np.array([math.pi - 0.05, -math.pi + 0.05])
    stats = EstimateStats.from_samples(phis, math.pi, 20e-9)
    assert abs(wrap_angle(stats.phi_mle - math.pi)) < 1e-9


def test_export_grid_csv(tmp_path):
    grid = uniform_prior(16)
    path = tmp_path / "grid.csv"
    export_grid_csv(grid, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "phi,density"
    assert len(lines) == 17
    phi0, dens0 = (float(tok) for tok in lines[1].split(","))
    assert phi0 == pytest.approx(grid.phis[0])
    assert dens0 == pytest.approx(1.0 / (2 * math.pi))
