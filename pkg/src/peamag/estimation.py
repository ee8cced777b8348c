"""Bayesian phase estimation on a periodic grid.

The posterior over the interferometer phase phi lives on a cell-centered grid
phi_j = -pi + 2pi (j + 1/2) / n covering (-pi, pi]. Weights are kept as log
densities and renormalized after every update (max-subtraction before the
exponential), so any number of sequential updates is safe against underflow.

A measurement of bit u at bit index k with control phase Phi multiplies the
posterior by

    P(u | phi) = [1 + (-1)^u D(t_k) cos(2^(k-1) phi - Phi)] / 2,

the same conditional law the simulator's circuit produces, with D the
Gaussian dephasing envelope at the evolution time t_k of that bit.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .constants import GAMMA_E, N_GRID_DEFAULT

_P_FLOOR = 1e-300  # likelihood clamp before the log
_TIE_LOG_TOL = 1e-9


def wrap_angle(x):
    """Wrap angle(s) into (-pi, pi]."""
    wrapped = np.mod(np.asarray(x, dtype=float) + math.pi, 2 * math.pi) - math.pi
    wrapped = np.where(wrapped == -math.pi, math.pi, wrapped)
    if np.ndim(x) == 0:
        return float(wrapped)
    return wrapped


@dataclass(frozen=True)
class LikelihoodGrid:
    """Posterior over phi: grid points and log density, normalized to 1."""

    phis: np.ndarray
    log_density: np.ndarray

    @property
    def n_points(self) -> int:
        return self.phis.size

    @property
    def cell(self) -> float:
        return 2 * math.pi / self.n_points

    @property
    def density(self) -> np.ndarray:
        return np.exp(self.log_density)

    def total_mass(self) -> float:
        return float(np.sum(np.exp(self.log_density)) * self.cell)

    def entropy(self) -> float:
        """Differential entropy -sum p ln p * cell (ln 2pi for the uniform)."""
        p = np.exp(self.log_density)
        return float(-np.sum(p * self.log_density) * self.cell)


def uniform_prior(n_points: int = N_GRID_DEFAULT) -> LikelihoodGrid:
    if n_points < 2:
        raise ValueError("grid needs at least 2 points")
    j = np.arange(n_points)
    phis = -math.pi + 2 * math.pi * (j + 0.5) / n_points
    log_density = np.full(n_points, -math.log(2 * math.pi))
    phis.setflags(write=False)
    return LikelihoodGrid(phis=phis, log_density=log_density)


def bayes_update(grid: LikelihoodGrid, u: int, k_index: int,
                 phi_control: float, t_k: float,
                 t2_star: Optional[float] = None) -> LikelihoodGrid:
    """Multiply in one measured bit and renormalize.

    t_k is the free-evolution time of this bit (2^(k-1) times the base unit);
    t2_star = None means no dephasing (D = 1).
    """
    if u not in (0, 1):
        raise ValueError("u must be 0 or 1")
    if k_index < 1:
        raise ValueError("k_index must be >= 1")
    if t_k < 0:
        raise ValueError("t_k must be nonnegative")
    d = 1.0 if t2_star is None else math.exp(-((t_k / t2_star) ** 2))
    sign = 1.0 if u == 0 else -1.0
    scale = 2.0 ** (k_index - 1)
    prob = 0.5 * (1.0 + sign * d * np.cos(scale * grid.phis - phi_control))
    log_w = grid.log_density + np.log(np.maximum(prob, _P_FLOOR))
    m = log_w.max()
    log_norm = m + math.log(np.sum(np.exp(log_w - m)) * grid.cell)
    return LikelihoodGrid(phis=grid.phis, log_density=log_w - log_norm)


@dataclass(frozen=True)
class MLEResult:
    """Grid maximum: phase, grid index, and whether the peak was degenerate."""

    phi: float
    index: int
    degenerate: bool


def mle(grid: LikelihoodGrid, refine: bool = False) -> MLEResult:
    """Maximum of the posterior.

    Ties within 1e-9 in log density resolve to the lowest grid index and set
    the degenerate flag (a flat or symmetric posterior reports as degenerate).
    refine=True applies parabolic interpolation through the three points
    around the maximum; the refined phase stays within half a cell.
    """
    lw = grid.log_density
    idx = int(np.argmax(lw))  # argmax already takes the lowest index on ties
    degenerate = int(np.sum(lw >= lw[idx] - _TIE_LOG_TOL)) > 1
    phi = float(grid.phis[idx])
    if refine and not degenerate:
        n = grid.n_points
        lm, l0, lp = lw[(idx - 1) % n], lw[idx], lw[(idx + 1) % n]
        denom = lm - 2.0 * l0 + lp
        if denom < -1e-30:
            delta = 0.5 * (lm - lp) / denom
            phi = wrap_angle(phi + delta * grid.cell)
    return MLEResult(phi=phi, index=idx, degenerate=degenerate)


def to_field(phi: float, t_min: float) -> float:
    """Convert a phase accumulated over the base unit t_min to a field (T)."""
    if t_min <= 0:
        raise ValueError("t_min must be positive")
    return phi / (GAMMA_E * t_min)


def phase_variance(samples: Sequence[float], phi_true: float) -> float:
    """Mean squared wrapped deviation of phase samples from the true phase."""
    arr = np.asarray(samples, dtype=float)
    if arr.size == 0:
        raise ValueError("need at least one sample")
    dev = wrap_angle(arr - phi_true)
    return float(np.mean(dev ** 2))


@dataclass(frozen=True)
class EstimateStats:
    """Batch summary of repeated phase estimates."""

    phi_mle: float
    b_mle: float
    variance: float
    sample_count: int

    def __post_init__(self):
        if self.variance < 0:
            raise ValueError("variance must be nonnegative")
        if not (-math.pi < self.phi_mle <= math.pi):
            raise ValueError("phi_mle must lie in (-pi, pi]")

    @classmethod
    def from_samples(cls, phi_samples: Sequence[float], phi_true: float,
                     t_min: float) -> "EstimateStats":
        arr = np.asarray(phi_samples, dtype=float)
        center = wrap_angle(phi_true + float(np.mean(wrap_angle(arr - phi_true))))
        return cls(phi_mle=center,
                   b_mle=to_field(center, t_min),
                   variance=phase_variance(arr, phi_true),
                   sample_count=arr.size)


def export_grid_csv(grid: LikelihoodGrid, path) -> None:
    """Write the posterior as (phi, density) rows."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["phi", "density"])
        for phi, dens in zip(grid.phis, grid.density):
            writer.writerow([repr(float(phi)), repr(float(dens))])
