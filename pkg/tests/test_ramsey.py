"""Free-precession interferometry: the sequence law, fringe simulation and
fitting, and the sensitivity formulas."""

import math

import numpy as np
import pytest

from peamag.constants import GAMMA_E, T2_STAR_DEFAULT
from peamag.estimation import wrap_angle
from peamag.ramsey import (
    bit_probability,
    fit_fringe,
    ideal_eta_squared,
    ideal_sms_quoted,
    ideal_sms_stationary,
    optimal_evolution_time,
    ramsey_dynamic_range,
    ramsey_probability,
    ramsey_sensitivity,
    sequence_prob_zero,
    simulate_ramsey_fringe,
    working_point_kappa,
)
from peamag.readout import ReadoutModel, kappa_threshold, sample_bits_given_p0
from peamag.spinops import DephasingModel


def test_sequence_law_without_dephasing():
    # pi/2 - evolve - control - pi/2 on |0>: P(bright) = (1 - cos(phi - Phi))/2
    for phi in (-2.5, -0.4, 0.0, 0.9, 3.0):
        for phi_c in (0.0, 0.7, -1.2):
            p0 = sequence_prob_zero(phi, phi_c, 0.0, None)
            assert p0 == pytest.approx(0.5 * (1 - math.cos(phi - phi_c)), abs=1e-12)


def test_sequence_law_with_dephasing():
    model = DephasingModel(1200e-9)
    t = 640e-9
    d = model.envelope(t)
    p0 = sequence_prob_zero(1.1, 0.3, t, model)
    assert p0 == pytest.approx(0.5 * (1 - d * math.cos(0.8)), abs=1e-12)


def test_ramsey_probability_normalizes_and_signs():
    phi, phi_c, d = 0.83, 0.11, 0.76
    p1 = ramsey_probability(1, phi, phi_c, d)
    p0 = ramsey_probability(0, phi, phi_c, d)
    assert p0 + p1 == pytest.approx(1.0, abs=1e-15)
    assert p1 == pytest.approx(0.5 * (1 - d * math.cos(phi - phi_c)), abs=1e-15)


def test_bit_probability_against_monte_carlo():
    model = ReadoutModel(kappa=2000)
    p0 = 0.3
    exact = bit_probability(p0, model)
    rng = np.random.default_rng(21)
    n = 40_000
    mc = sample_bits_given_p0(p0, n, model, rng).mean()
    se = math.sqrt(exact * (1 - exact) / n)
    assert abs(mc - exact) < 3.5 * se


def test_fringe_frequency_value():
    # 142.9 uT precesses at very nearly 4.00 MHz
    assert GAMMA_E * 142.9e-6 / (2 * math.pi) == pytest.approx(4.0012e6, rel=1e-4)


def test_field_sweep_period_value():
    # full fringe period at fixed 640 ns evolution
    assert 2 * math.pi / (GAMMA_E * 640e-9) == pytest.approx(55.80e-6, rel=1e-3)


def test_simulated_fringe_matches_expectation():
    model = ReadoutModel(kappa=18894)
    rng = np.random.default_rng(5)
    times = np.linspace(0.0, 1.2e-6, 13)
    fringe = simulate_ramsey_fringe(model, rng, 3000, times=times,
                                    b_ext=142.9e-6)
    se = np.sqrt(fringe.p_expected * (1 - fringe.p_expected) / 3000)
    assert (np.abs(fringe.signal - fringe.p_expected) < 4.0 * se + 1e-9).all()


def test_fit_fringe_recovers_synthetic_parameters():
    times = np.linspace(0.0, 1.5e-6, 120)
    f_true, tau_true = 3.7e6, 1.1e-6
    signal = 0.5 - 0.42 * np.exp(-((times / tau_true) ** 2)) * np.cos(
        2 * math.pi * f_true * times)
    fit = fit_fringe(times, signal)
    assert fit.frequency == pytest.approx(f_true, rel=1e-6)
    assert fit.tau == pytest.approx(tau_true, rel=1e-4)


def test_working_point_kappa_reduces_to_threshold_value():
    # cos = 0 at the steepest point, leaving the pure projection-noise factor
    assert working_point_kappa(math.pi / 2, 0.0, 1.0, 0.010, 0.007) == \
        pytest.approx(kappa_threshold(0.010, 0.007), rel=1e-12)


def test_sensitivity_diverges_at_fringe_extremum():
    assert ramsey_sensitivity(0.0, 0.0, 640e-9, 1200e-9, 0.010, 0.007) == math.inf


def test_sensitivity_finite_and_positive_at_working_point():
    eta2 = ramsey_sensitivity(math.pi / 2, 0.0, 640e-9, 1200e-9, 0.010, 0.007)
    assert 0 < eta2 < math.inf
    # matches the assembled formula at quadrature
    d = math.exp(-((640 / 1200) ** 2))
    expected = working_point_kappa(math.pi / 2, 0.0, d, 0.010, 0.007) / (
        GAMMA_E ** 2 * 640e-9 * d * d)
    assert eta2 == pytest.approx(expected, rel=1e-12)


def test_optimal_time_is_half_t2_star():
    assert optimal_evolution_time(1200e-9) == pytest.approx(600e-9, rel=1e-4)


def test_ideal_sms_values():
    assert ideal_sms_quoted(T2_STAR_DEFAULT) == pytest.approx(8.555e-9, rel=1e-3)
    assert ideal_sms_stationary(T2_STAR_DEFAULT) == pytest.approx(9.423e-9, rel=1e-3)
    # stationary value is the square root of the optimal-time eta^2
    t_opt = optimal_evolution_time(T2_STAR_DEFAULT)
    assert ideal_sms_stationary(T2_STAR_DEFAULT) == pytest.approx(
        math.sqrt(ideal_eta_squared(t_opt, T2_STAR_DEFAULT)), rel=1e-6)


def test_ramsey_dynamic_range_formula():
    assert ramsey_dynamic_range(1.0, 1e-3) == pytest.approx(
        0.5 * math.pi * math.sqrt(1000.0), rel=1e-12)


def test_averaged_estimator_scales_as_one_over_n():
    # linearized phase readout at the steepest point: var ~ 1/N
    model = ReadoutModel(alpha0=20.0, alpha1=0.01, kappa=1)
    phi_wp = math.pi / 2
    p_u = bit_probability(0.5 * (1 - math.cos(phi_wp)), model)
    h = 1e-4
    slope = (bit_probability(0.5 * (1 - math.cos(phi_wp + h)), model)
             - bit_probability(0.5 * (1 - math.cos(phi_wp - h)), model)) / (2 * h)
    rng = np.random.default_rng(31)
    ns = [1000, 4000, 16000, 64000]
    variances = []
    for n in ns:
        estimates = []
        for _ in range(200):
            mean_u = sample_bits_given_p0(0.5, n, model, rng).mean()
            estimates.append(phi_wp + (mean_u - p_u) / slope)
        variances.append(np.var(estimates))
    fit_slope = np.polyfit(np.log(ns), np.log(variances), 1)[0]
    assert fit_slope == pytest.approx(-1.0, abs=0.1)
