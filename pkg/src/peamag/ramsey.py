"""Ramsey interferometry: fringe simulation, fitting, and sensitivity.

The simulated sequence is pi/2 - free evolution - control rotation - pi/2
followed by thresholded photon readout. The recorded signal is the mean of
the measured bit u over n_avg repetitions, so an ideal fringe runs between
the dark and bright detection levels with contrast set by the dephasing
envelope and the readout error rates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import optimize, stats

from .constants import GAMMA_E, T2_STAR_DEFAULT
from .readout import (
    ReadoutModel,
    _clip_probability,
    _threshold_index,
    sample_bits_given_p0,
)
from .spinops import (DephasingModel, apply_dephasing, apply_unitary,
                      feedback_rotation, ground_state, phase_evolution,
                      rotation)

_RY90 = rotation((0.0, 1.0, 0.0), math.pi / 2)


def ramsey_probability(u: int, phi: float, phi_control: float = 0.0,
                       d: float = 1.0) -> float:
    """P(u | phi) = [1 + (-1)^u d cos(phi - phi_control)] / 2.

    u = 1 labels the bright detection outcome; the sequence in this module
    produces exactly this law for the measured bit when readout is perfect.
    """
    if u not in (0, 1):
        raise ValueError("u must be 0 or 1")
    if not 0.0 <= d <= 1.0:
        raise ValueError("contrast d must lie in [0, 1]")
    sign = 1.0 if u == 0 else -1.0
    return 0.5 * (1.0 + sign * d * math.cos(phi - phi_control))


def sequence_prob_zero(phi: float, phi_control: float, t: float,
                       dephasing: Optional[DephasingModel]) -> float:
    """Run the pulse sequence on |0><0| and return the bright-projection
    probability of the final state."""
    state = apply_unitary(ground_state(), _RY90)
    state = phase_evolution(state, phi)
    if dephasing is not None:
        state = apply_dephasing(state, t, dephasing)
    state = apply_unitary(state, feedback_rotation(phi_control))
    state = apply_unitary(state, _RY90)
    return state.prob_zero


def bit_probability(p0: float, model: ReadoutModel) -> float:
    """Exact P(u = 1) for a readout of a state with bright probability p0.

    Sums the binomial mixture over the number of bright projections with the
    exact Poisson tail for each term (window truncated below 1e-14 mass).
    """
    p0 = _clip_probability(p0)
    kmin = _threshold_index(model.threshold)
    kappa = model.kappa
    mu = kappa * p0
    sd = math.sqrt(max(kappa * p0 * (1.0 - p0), 0.0))
    lo = max(0, math.floor(mu - 8.0 * sd - 5.0))
    hi = min(kappa, math.ceil(mu + 8.0 * sd + 5.0))
    n0 = np.arange(lo, hi + 1)
    weights = stats.binom.pmf(n0, kappa, p0)
    means = n0 * model.alpha0 + (kappa - n0) * model.alpha1
    return float(np.sum(weights * stats.poisson.sf(kmin - 1, means)))


@dataclass(frozen=True)
class RamseyFringe:
    """One simulated fringe: sweep axis, measured signal, analytic reference."""

    axis: str  # "time" or "field"
    x: np.ndarray
    signal: np.ndarray
    p_expected: np.ndarray
    n_avg: int


def simulate_ramsey_fringe(model: ReadoutModel, rng: np.random.Generator,
                           n_avg: int,
                           times: Optional[np.ndarray] = None,
                           fields: Optional[np.ndarray] = None,
                           b_ext: float = 0.0, t: float = 0.0,
                           phi_control: float = 0.0,
                           t2_star: Optional[float] = T2_STAR_DEFAULT) -> RamseyFringe:
    """Monte-Carlo fringe over a time sweep (fixed b_ext) or a field sweep
    (fixed evolution time t), n_avg measured bits per grid point."""
    if (times is None) == (fields is None):
        raise ValueError("exactly one of times or fields must be given")
    if n_avg < 1:
        raise ValueError("n_avg must be positive")
    dephasing = None if t2_star is None else DephasingModel(t2_star)
    if times is not None:
        axis = "time"
        x = np.asarray(times, dtype=float)
        phis = GAMMA_E * b_ext * x
        ts = x
    else:
        axis = "field"
        x = np.asarray(fields, dtype=float)
        phis = GAMMA_E * x * t
        ts = np.full(x.size, float(t))
    signal = np.empty(x.size)
    p_exp = np.empty(x.size)
    for i in range(x.size):
        p0 = sequence_prob_zero(phis[i], phi_control, ts[i], dephasing)
        signal[i] = sample_bits_given_p0(p0, n_avg, model, rng).mean()
        p_exp[i] = bit_probability(p0, model)
    return RamseyFringe(axis=axis, x=x, signal=signal, p_expected=p_exp,
                        n_avg=n_avg)


@dataclass(frozen=True)
class FringeFit:
    """Damped-sinusoid fit a + b exp(-(t/tau)^2) cos(2 pi f t + chi)."""

    frequency: float
    frequency_err: float
    amplitude: float
    offset: float
    phase: float
    tau: float
    tau_err: float


def _fringe_model(t, a, b, tau, f, chi):
    return a + b * np.exp(-((t / tau) ** 2)) * np.cos(2 * np.pi * f * t + chi)


def fit_fringe(times: np.ndarray, signal: np.ndarray,
               tau_guess: float = T2_STAR_DEFAULT,
               freq_guess: Optional[float] = None) -> FringeFit:
    """Least-squares fit of a Gaussian-damped sinusoid to a time-sweep fringe."""
    times = np.asarray(times, dtype=float)
    signal = np.asarray(signal, dtype=float)
    centered = signal - signal.mean()
    if freq_guess is None:
        # dominant nonzero FFT bin of the centered signal
        dt = times[1] - times[0]
        spectrum = np.abs(np.fft.rfft(centered))
        freqs = np.fft.rfftfreq(times.size, dt)
        freq_guess = float(freqs[1:][np.argmax(spectrum[1:])])
    p0 = [float(signal.mean()), float(np.ptp(centered)) / 2, tau_guess,
          freq_guess, 0.0]
    popt, pcov = optimize.curve_fit(_fringe_model, times, signal, p0=p0,
                                    maxfev=20000)
    perr = np.sqrt(np.diag(pcov))
    return FringeFit(frequency=abs(popt[3]), frequency_err=float(perr[3]),
                     amplitude=popt[1], offset=popt[0], phase=popt[4],
                     tau=abs(popt[2]), tau_err=float(perr[2]))


def working_point_kappa(phi: float, phi_control: float, d: float,
                        alpha0: float, alpha1: float) -> float:
    """Shot requirement at an arbitrary working point (the full expression,
    including the cos terms that vanish at quadrature)."""
    if alpha0 <= alpha1:
        raise ValueError("need alpha0 > alpha1")
    c = d * math.cos(phi - phi_control)
    return (1.0 + 2.0 * (alpha0 + alpha1) / (alpha0 - alpha1) ** 2
            + 2.0 * c / (alpha0 - alpha1) - c * c)


def ramsey_sensitivity(phi: float, phi_control: float, t: float,
                       t2_star: float, alpha0: float, alpha1: float) -> float:
    """Squared field sensitivity eta^2 (T^2/Hz) for one Ramsey working point.

    Diverges (returns inf) when sin(phi - phi_control) = 0, where the fringe
    slope carries no field information.
    """
    if t <= 0 or t2_star <= 0:
        raise ValueError("t and t2_star must be positive")
    d = math.exp(-((t / t2_star) ** 2))
    s = math.sin(phi - phi_control)
    if s == 0.0:
        return math.inf
    kappa_wp = working_point_kappa(phi, phi_control, d, alpha0, alpha1)
    return kappa_wp / (GAMMA_E ** 2 * t * d * d * s * s)


def ideal_eta_squared(t: float, t2_star: float) -> float:
    """eta^2 with unit shot cost and unit fringe slope, vs evolution time."""
    if t <= 0:
        raise ValueError("t must be positive")
    return math.exp(2.0 * (t / t2_star) ** 2) / (GAMMA_E ** 2 * t)


def optimal_evolution_time(t2_star: float = T2_STAR_DEFAULT) -> float:
    """Numerically minimize the ideal eta^2 over t in (0, 3 T2*]."""
    res = optimize.minimize_scalar(
        lambda t: ideal_eta_squared(t, t2_star),
        bounds=(1e-6 * t2_star, 3.0 * t2_star), method="bounded",
        options={"xatol": 1e-6 * t2_star})
    return float(res.x)


def ideal_sms_quoted(t2_star: float = T2_STAR_DEFAULT) -> float:
    """Conventional single-spin shot-noise sensitivity e^0.5 / (gamma sqrt(T2*))."""
    return math.exp(0.5) / (GAMMA_E * math.sqrt(t2_star))


def ideal_sms_stationary(t2_star: float = T2_STAR_DEFAULT) -> float:
    """Sensitivity at the true stationary point t = T2*/2 of the ideal eta(t):
    sqrt(2) e^0.25 / (gamma sqrt(T2*)), about 10% above the quoted constant."""
    return math.sqrt(2.0) * math.exp(0.25) / (GAMMA_E * math.sqrt(t2_star))


def ramsey_dynamic_range(t_total: float, t2: float) -> float:
    """Dynamic range (pi/2) sqrt(T / T2) for total averaging time T."""
    if t_total <= 0 or t2 <= 0:
        raise ValueError("times must be positive")
    return 0.5 * math.pi * math.sqrt(t_total / t2)
