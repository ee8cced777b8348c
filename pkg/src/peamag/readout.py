"""Thresholded photon-counting readout of the spin state.

Each bit measurement repeats the full pulse sequence kappa times. Every shot
projects the state (bright |0> with probability rho_00), then emits a Poisson
number of photons with mean alpha0 (bright) or alpha1 (dark). The summed
counts are compared against a threshold, by default kappa*(alpha0+alpha1)/2:
counts >= threshold assign u = 1 (the bright-state label), counts below give
u = 0. Counts exactly at the threshold assign u = 1.

The fast sampling path draws the number of bright projections from a binomial
and the summed counts from a single Poisson, which is distributionally
identical to the per-shot path (sum of independent Poissons); the per-shot
path is kept for validation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import stats

from .constants import ALPHA0_DEFAULT, ALPHA1_DEFAULT


def kappa_threshold(alpha0: float, alpha1: float) -> float:
    """Shots needed for unit signal-to-noise at the cos = 0 working point.

    kappa_th = 1 + 2 (alpha0 + alpha1) / (alpha0 - alpha1)^2. The full
    working-point dependence (the cos terms) lives in the Ramsey sensitivity
    formula; this is the conventional fixed reference used to derive shot
    budgets.
    """
    if alpha0 <= alpha1:
        raise ValueError("bright rate alpha0 must exceed dark rate alpha1")
    if alpha1 < 0:
        raise ValueError("photon rates must be nonnegative")
    return 1.0 + 2.0 * (alpha0 + alpha1) / (alpha0 - alpha1) ** 2


def kappa_for_multiple(multiple: float,
                       alpha0: float = ALPHA0_DEFAULT,
                       alpha1: float = ALPHA1_DEFAULT) -> int:
    """Integer shot count for a given multiple of kappa_th (rounded up)."""
    if multiple <= 0:
        raise ValueError("multiple must be positive")
    return math.ceil(multiple * kappa_threshold(alpha0, alpha1))


@dataclass(frozen=True)
class ReadoutModel:
    """Poisson photon-count readout with a fixed decision threshold."""

    alpha0: float = ALPHA0_DEFAULT
    alpha1: float = ALPHA1_DEFAULT
    kappa: int = 1
    threshold: Optional[float] = None

    def __post_init__(self):
        if self.alpha0 <= self.alpha1 or self.alpha1 < 0:
            raise ValueError("need alpha0 > alpha1 >= 0")
        if not isinstance(self.kappa, (int, np.integer)) or self.kappa < 1:
            raise ValueError("kappa must be a positive integer")
        if self.threshold is None:
            object.__setattr__(
                self, "threshold", self.kappa * (self.alpha0 + self.alpha1) / 2.0)
        elif self.threshold < 0:
            raise ValueError("threshold must be nonnegative")


@dataclass(frozen=True)
class BitRecord:
    """One thresholded measurement outcome with its context."""

    u: int
    raw_counts: int
    k_index: Optional[int] = None
    phi_control: float = 0.0

    def __post_init__(self):
        if self.u not in (0, 1):
            raise ValueError("u must be 0 or 1")
        if self.raw_counts < 0:
            raise ValueError("raw_counts must be nonnegative")


def _clip_probability(p0: float) -> float:
    # rounding in the upstream matrix algebra can leave p0 a few ulp outside
    # [0, 1]; anything further out is a real bug
    if not -1e-9 <= p0 <= 1.0 + 1e-9:
        raise ValueError(f"p0 = {p0!r} is not a probability")
    return min(max(p0, 0.0), 1.0)


def sample_counts(p0: float, model: ReadoutModel, rng: np.random.Generator,
                  per_shot: bool = False) -> int:
    """Summed photon counts for one kappa-shot readout of a state with
    bright-projection probability p0."""
    p0 = _clip_probability(p0)
    if per_shot:
        bright = rng.random(model.kappa) < p0
        means = np.where(bright, model.alpha0, model.alpha1)
        return int(rng.poisson(means).sum())
    n_bright = rng.binomial(model.kappa, p0)
    mean = n_bright * model.alpha0 + (model.kappa - n_bright) * model.alpha1
    return int(rng.poisson(mean))


def sample_bit(state, model: ReadoutModel, rng: np.random.Generator,
               k_index: Optional[int] = None, phi_control: float = 0.0,
               per_shot: bool = False) -> BitRecord:
    """Measure one bit from a QubitState through the photon-counting model."""
    counts = sample_counts(state.prob_zero, model, rng, per_shot=per_shot)
    u = 1 if counts >= model.threshold else 0
    return BitRecord(u=u, raw_counts=counts, k_index=k_index,
                     phi_control=phi_control)


def sample_bits_given_p0(p0: float, n: int, model: ReadoutModel,
                         rng: np.random.Generator) -> np.ndarray:
    """Vectorized fast-path bits for n independent repetitions at fixed p0."""
    p0 = _clip_probability(p0)
    n_bright = rng.binomial(model.kappa, p0, size=n)
    means = n_bright * model.alpha0 + (model.kappa - n_bright) * model.alpha1
    counts = rng.poisson(means)
    return (counts >= model.threshold).astype(np.uint8)


def _threshold_index(threshold: float) -> int:
    # counts >= threshold is counts >= ceil(threshold); exact-integer
    # thresholds include the tie, which ceil leaves unchanged
    return math.ceil(threshold)


def measurement_fidelity(model: ReadoutModel) -> float:
    """Exact readout fidelity f_d = [P(u=1 | |0>) + P(u=0 | |1>)] / 2.

    Uses the exact Poisson distribution of the summed counts for pure bright
    and pure dark preparations (no Gaussian approximation).
    """
    kmin = _threshold_index(model.threshold)
    p_correct_bright = stats.poisson.sf(kmin - 1, model.kappa * model.alpha0)
    p_correct_dark = stats.poisson.cdf(kmin - 1, model.kappa * model.alpha1)
    return 0.5 * (p_correct_bright + p_correct_dark)


def measurement_fidelity_mc(model: ReadoutModel, n_trials: int,
                            rng: np.random.Generator) -> float:
    """Monte-Carlo estimate of the readout fidelity, for cross-checks."""
    u_bright = sample_bits_given_p0(1.0, n_trials, model, rng)
    u_dark = sample_bits_given_p0(0.0, n_trials, model, rng)
    return 0.5 * (u_bright.mean() + 1.0 - u_dark.mean())
