"""AC sensing: the echo phase against a numerical quadrature oracle, the
quadrature-pair inversion, and the end-to-end estimation loop."""

import math

import numpy as np
import pytest
from scipy import integrate

from peamag.acmag import (
    ACField,
    ACPhasePair,
    EchoSequence,
    accumulated_phase,
    extract_ac_field,
    run_ac_pea,
)
from peamag.constants import GAMMA_E
from peamag.estimation import wrap_angle
from peamag.pea import PEAConfig


def quadrature_oracle(field: ACField, seq: EchoSequence) -> float:
    """Integrate the signed precession: + before the mid-unit pi pulse,
    - after, for each of the n_units echo units in sequence."""
    period = field.period
    t0 = seq.trigger_offset(period)
    total = 0.0
    for unit in range(seq.n_units):
        start = t0 + unit * period
        plus, _ = integrate.quad(lambda t: GAMMA_E * field.value(t),
                                 start, start + period / 2, limit=200)
        minus, _ = integrate.quad(lambda t: GAMMA_E * field.value(t),
                                  start + period / 2, start + period, limit=200)
        total += plus - minus
    return total


@pytest.mark.parametrize("kind", ["I", "Q"])
@pytest.mark.parametrize("theta", [-2.7, -1.1, 0.0, 0.4, 1.57, 3.0])
def test_accumulated_phase_matches_quadrature(kind, theta):
    field = ACField(amplitude=2.0e-6, omega=2 * math.pi * 1.0e6, theta=theta)
    seq = EchoSequence(kind)
    assert accumulated_phase(field, seq) == pytest.approx(
        quadrature_oracle(field, seq), abs=1e-9)


def test_closed_forms():
    b, omega = 1.3e-6, 2 * math.pi * 2.5e6
    for theta in (-2.0, 0.0, 0.9):
        field = ACField(amplitude=b, omega=omega, theta=theta)
        pref = 4.0 * GAMMA_E * b / omega
        assert accumulated_phase(field, EchoSequence("I")) == pytest.approx(
            pref * math.cos(theta), rel=1e-12)
        assert accumulated_phase(field, EchoSequence("Q")) == pytest.approx(
            pref * math.sin(theta), rel=1e-12)


def test_trigger_offsets():
    period = 1.0e-6
    assert EchoSequence("I").trigger_offset(period) == pytest.approx(0.75e-6)
    assert EchoSequence("Q").trigger_offset(period) == pytest.approx(0.5e-6)
    with pytest.raises(ValueError):
        EchoSequence("X")


def test_stacked_units_add_linearly():
    field = ACField(amplitude=0.8e-6, omega=2 * math.pi * 1.0e6, theta=0.6)
    single = accumulated_phase(field, EchoSequence("Q", 1))
    stacked = accumulated_phase(field, EchoSequence("Q", 4))
    assert stacked == pytest.approx(4.0 * single, rel=1e-12)
    assert stacked == pytest.approx(
        quadrature_oracle(field, EchoSequence("Q", 4)), abs=1e-9)


def test_extract_round_trip():
    omega = 2 * math.pi * 1.0e6
    for theta in (-3.0, -0.5, 0.0, 1.2, 2.9):
        b = 1.7e-6
        phi_i = 4 * GAMMA_E * b / omega * math.cos(theta)
        phi_q = 4 * GAMMA_E * b / omega * math.sin(theta)
        b_est, theta_est = extract_ac_field(phi_i, phi_q, omega)
        assert b_est == pytest.approx(b, rel=1e-12)
        assert wrap_angle(theta_est - theta) == pytest.approx(0.0, abs=1e-12)


def test_extract_zero_pair():
    b_est, theta_est = extract_ac_field(0.0, 0.0, 2 * math.pi * 1e6)
    assert b_est == 0.0
    assert theta_est == 0.0


def test_extract_validates():
    with pytest.raises(ValueError):
        extract_ac_field(0.1, 0.1, -1.0)


def test_run_ac_pea_recovers_field_and_angle():
    omega = 2 * math.pi * 1.0e6
    config = PEAConfig(k_total=6, m_k=4, f=0, t2_star=None, n_grid=2048)
    b = 2.0 * omega / (4.0 * GAMMA_E)  # 2 rad quadrature amplitude
    rng = np.random.default_rng(99)
    bound = 2.0 * 2 * math.pi / 2 ** 6
    for theta in (-2.2, 0.3, 1.8):
        field = ACField(amplitude=b, omega=omega, theta=theta)
        pair = run_ac_pea(config, field, None, rng)
        assert isinstance(pair, ACPhasePair)
        b_est, theta_est = extract_ac_field(pair.phi_i, pair.phi_q, omega)
        assert abs(wrap_angle(theta_est - theta)) < bound
        assert b_est == pytest.approx(b, rel=0.08)


def test_run_ac_pea_time_accounting():
    omega = 2 * math.pi * 1.0e6
    config = PEAConfig(k_total=3, m_k=1, f=0, t2_star=None, n_grid=256)
    field = ACField(amplitude=1e-6, omega=omega, theta=0.0)
    pair = run_ac_pea(config, field, None, np.random.default_rng(1))
    # each of the 7 resources is one unit of one field period
    assert pair.result_i.total_time == pytest.approx(7 * field.period)
