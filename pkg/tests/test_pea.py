"""Adaptive and hard-decision estimation: schedules, resource accounting,
control-phase bookkeeping, and end-to-end statistical behavior."""

import math
import warnings

import numpy as np
import pytest

from peamag.estimation import phase_variance, wrap_angle
from peamag.pea import (
    BENCHMARK_PHASES,
    PEAConfig,
    control_phase_set,
    measurement_schedule,
    qpea_binary_estimate,
    resource_count,
    run_napea,
    run_napea_phase,
    run_qpea_phase,
)
from peamag.readout import ReadoutModel, kappa_for_multiple


def make_rng(trial):
    return np.random.Generator(np.random.Philox(
        key=np.random.SeedSequence([777, trial]).generate_state(2, np.uint64)))


def test_phase_set_contents():
    assert control_phase_set("SINGLE") == pytest.approx([0.0])
    assert control_phase_set("DUAL") == pytest.approx([0.0, math.pi / 2])
    assert control_phase_set("QUAD") == pytest.approx(
        [0.0, math.pi / 2, math.pi, 1.5 * math.pi])
    assert control_phase_set("OCT") == pytest.approx(
        [j * math.pi / 4 for j in range(8)])
    assert control_phase_set("VAR", n_reps=5) == pytest.approx(
        [j * math.pi / 5 for j in range(5)])


def test_var_set_needs_rep_count():
    with pytest.raises(ValueError):
        control_phase_set("VAR")
    with pytest.raises(ValueError):
        control_phase_set("NOPE")


def test_schedule_weights_grow_toward_low_k():
    assert measurement_schedule(4, 2, 1) == [(4, 2), (3, 3), (2, 4), (1, 5)]
    assert measurement_schedule(3, 4, 0) == [(3, 4), (2, 4), (1, 4)]


def test_resource_count_closed_form_spot_checks():
    for k, m, f in [(4, 2, 1), (6, 4, 4), (7, 1, 0), (6, 20, 0), (8, 8, 8)]:
        expected = sum(m2 * 2 ** (k2 - 1) for k2, m2 in measurement_schedule(k, m, f))
        assert resource_count(k, m, f) == expected


def test_doubling_both_weights_doubles_resources():
    assert resource_count(8, 8, 8) == 2 * resource_count(8, 4, 4) == 4016


def test_benchmark_times():
    # the two best-sensitivity operating points and their wall-clock budgets
    n_napea = resource_count(6, 20, 0)
    assert n_napea == 1260
    t_napea = n_napea * 20e-9 * kappa_for_multiple(2.0)
    assert 0.18 < t_napea < 0.22

    n_qpea = resource_count(7, 1, 0)
    assert n_qpea == 127
    t_qpea = n_qpea * 20e-9 * kappa_for_multiple(10.0)
    assert 0.09 < t_qpea < 0.11


def test_config_validation():
    with pytest.raises(ValueError):
        PEAConfig(k_total=0)
    with pytest.raises(ValueError):
        PEAConfig(k_total=3, m_k=0, f=0)
    with pytest.raises(ValueError):
        PEAConfig(k_total=3, phase_set="WEIRD")
    with pytest.raises(ValueError):
        PEAConfig(k_total=3, t_min=0.0)
    with pytest.warns(UserWarning):
        PEAConfig(k_total=10, t_min=20e-9, t2_star=1200e-9)


def test_qpea_decodes_dyadic_phase_exactly():
    # phi = 2 pi * 0.625 = 2 pi (0.101)_2: deterministic bits (1, 0, 1)
    config = PEAConfig(k_total=3, m_k=1, f=0, t2_star=None, phase_set=None,
                       n_grid=256)
    phi = 2 * math.pi * 0.625
    res = run_qpea_phase(config, phi, None, make_rng(0), convert_field=False)
    assert res.binary_bits == (1, 0, 1)
    assert res.phi_binary == pytest.approx(wrap_angle(phi), abs=1e-12)
    assert res.aliased  # 3.93 rad folds back into (-pi, pi]


def test_qpea_binary_estimate_values():
    assert qpea_binary_estimate((1, 0, 1)) == pytest.approx(
        2 * math.pi * 0.625 - 2 * math.pi)
    assert qpea_binary_estimate((0, 0, 0)) == 0.0
    assert qpea_binary_estimate((1,)) == pytest.approx(math.pi)


def test_qpea_control_phase_recursion():
    config = PEAConfig(k_total=4, m_k=1, f=0, t2_star=None, phase_set=None,
                       n_grid=256)
    res = run_qpea_phase(config, 2 * math.pi * 0.3, None, make_rng(1),
                         convert_field=False)
    decided = {}
    for rec in res.bits:
        expected = math.pi * sum(u / 2 ** (j - rec.k_index)
                                 for j, u in decided.items())
        assert rec.phi_control == pytest.approx(expected, abs=1e-12)
        decided[rec.k_index] = rec.u  # m = 1, so the bit is the vote
    assert res.bits[0].phi_control == 0.0


def test_napea_cycle_restarts_each_round():
    config = PEAConfig(k_total=3, m_k=3, f=1, t2_star=None, phase_set="QUAD",
                       n_grid=256)
    res = run_napea_phase(config, 0.4, None, make_rng(2), convert_field=False)
    quad = control_phase_set("QUAD")
    i = 0
    for k, m in measurement_schedule(3, 3, 1):
        for rep in range(m):
            rec = res.bits[i]
            assert rec.k_index == k
            assert rec.phi_control == pytest.approx(quad[rep % 4], abs=1e-15)
            i += 1
    assert i == len(res.bits)


def test_napea_estimates_benchmark_phase():
    config = PEAConfig(k_total=6, m_k=4, f=4, t2_star=None, n_grid=2048)
    phi = BENCHMARK_PHASES[2]
    errs = []
    for trial in range(40):
        res = run_napea_phase(config, phi, None, make_rng(trial + 10),
                              convert_field=False)
        errs.append(wrap_angle(res.phi_mle - phi))
    assert abs(np.mean(errs)) < 0.02
    assert np.sqrt(np.mean(np.square(errs))) < 0.05


def test_deeper_ladders_suppress_secondary_peaks():
    # variance about the truth falls monotonically enough with depth
    variances = []
    for k in (2, 4, 6):
        config = PEAConfig(k_total=k, m_k=2, f=2, t2_star=None, n_grid=2048)
        phis = []
        for trial in range(60):
            res = run_napea_phase(config, 0.7, None, make_rng(1000 * k + trial),
                                  convert_field=False)
            phis.append(res.phi_mle)
        variances.append(phase_variance(phis, 0.7))
    assert variances[2] < variances[1] < variances[0]


def test_grid_size_does_not_change_bits():
    # bits consume randomness, the grid does not
    phi = BENCHMARK_PHASES[0]
    results = {}
    for n_grid in (4096, 8192):
        config = PEAConfig(k_total=5, m_k=2, f=2, t2_star=None, n_grid=n_grid)
        results[n_grid] = run_napea_phase(config, phi, None, make_rng(3),
                                          convert_field=False)
    bits_4k = [rec.u for rec in results[4096].bits]
    bits_8k = [rec.u for rec in results[8192].bits]
    assert bits_4k == bits_8k
    assert abs(results[4096].phi_mle - results[8192].phi_mle) < 2 * math.pi / 4096


def test_napea_with_photon_readout_converges():
    model = ReadoutModel(kappa=kappa_for_multiple(5.0))
    config = PEAConfig(k_total=6, m_k=4, f=4)
    estimates = []
    for trial in range(25):
        res = run_napea(config, 15.0e-6, model, make_rng(400 + trial))
        estimates.append(res.b_mle)
        assert not res.aliased
    # single-run sigma is a few uT at 20 ns units; the mean must close in
    assert np.mean(estimates) == pytest.approx(15.0e-6, abs=2.5e-6)
    assert res.total_time == pytest.approx(
        resource_count(6, 4, 4) * 20e-9 * model.kappa)


def test_aliased_flag():
    config = PEAConfig(k_total=2, m_k=2, f=0, t2_star=None, n_grid=256)
    res = run_napea_phase(config, 3.5, None, make_rng(5), convert_field=False)
    assert res.aliased


def test_total_time_counts_kappa_repeats():
    config = PEAConfig(k_total=3, m_k=1, f=0, t2_star=None, n_grid=256)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        res = run_napea_phase(config, 0.2, None, make_rng(6),
                              convert_field=False)
    assert res.total_time == pytest.approx(resource_count(3, 1, 0) * 20e-9)
    assert res.n_resources == resource_count(3, 1, 0)
